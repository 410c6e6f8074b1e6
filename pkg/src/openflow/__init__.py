"""
OpenFlow 1.3 southbound agent: codec, channel state machine, output arbiter
and the socket agent that runs them against a controller
"""
