"""Termination prover for logically constrained term rewriting systems."""

from .frontend import LctrsProblem, Rule, parse, parse_file
from .prover import ProofNode, ProverConfig, Verdict, prove, recheck

__all__ = ["LctrsProblem", "Rule", "parse", "parse_file", "ProofNode", "ProverConfig", "Verdict", "prove", "recheck"]
__version__ = "0.1.0"
