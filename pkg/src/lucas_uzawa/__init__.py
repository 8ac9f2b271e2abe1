"""Discrete-time Lucas-Uzawa growth model: primitives, checks, and a
value-iteration solver for returns that may be unbounded below."""
