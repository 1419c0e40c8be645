"""Finite atomic models of fusion, induction and restriction for commutative
von Neumann algebras, with numerical coherence checking."""

__version__ = "0.1.0"
