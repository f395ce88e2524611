"""Cross-layer QoS toolkit for OFDMA broadband wireless access cells.

PHY rate tables, SINR-based admission control, uplink rescheduling, a
Markov-chain model of the admission policy and a discrete-event simulator
that checks it.
"""

__version__ = "0.1.0"
