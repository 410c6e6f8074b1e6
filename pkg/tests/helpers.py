"""
Test helpers shared across modules
"""

from src.models.actions import Action
from src.models.flow import FlowMod, FlowModCommand, InstructionSet, MatchField


class FakeClock:
    """Manually advanced seconds clock"""

    def __init__(self, start=1000.0):
        self.now = start

    def __call__(self):
        return self.now

    def advance(self, seconds):
        self.now += seconds


def forward(in_port, out_port, priority=100, **extra):
    """ADD descriptor sending in_port traffic to out_port"""
    return FlowMod(
        command=FlowModCommand.ADD,
        match=(MatchField('in_port', in_port),),
        priority=priority,
        instructions=InstructionSet(write_actions=(Action.output(out_port),)),
        **extra,
    )


def write_actions(*actions, goto=None, table_id=0, match=(), priority=100, **extra):
    """ADD descriptor with a write-actions instruction"""
    return FlowMod(
        command=FlowModCommand.ADD,
        table_id=table_id,
        match=tuple(match),
        priority=priority,
        instructions=InstructionSet(goto_table=goto, write_actions=tuple(actions) or None),
        **extra,
    )
