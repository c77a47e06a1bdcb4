"""Self-contained QF_BV solver speaking SMT-LIB2 over standard streams.

Independent of the rest of the engine on purpose: the engine talks to it
through a child process exactly as it would talk to z3 or cvc5, and the test
suite cross-checks its verdicts against brute-force enumeration.
"""
