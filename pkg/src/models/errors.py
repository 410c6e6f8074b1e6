"""
Exception hierarchy for the switch fabric
"""


class SwitchError(Exception):
    """Base class for every error raised by the switch library"""


class ConfigurationError(SwitchError):
    """
    Invalid switch configuration (raised at startup only)

    Attributes:
        problems: List of individual validation messages
    """

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__('; '.join(self.problems))


class CapacityError(SwitchError):
    """A bounded structure (matcher, table) has no vacant slot"""


class FramingError(SwitchError):
    """OpenFlow stream framing is broken; the connection cannot continue"""


class EncodingError(SwitchError):
    """A message cannot be serialized (for example its body overflows 16 bits)"""


class OpenFlowError(SwitchError):
    """
    Error that maps onto an OFPT_ERROR reply

    Attributes:
        error_type: OFPET_* value
        code: Error code within the type
        xid: Transaction id of the offending request (0 if unknown)
        data: Leading bytes of the offending request
    """

    def __init__(self, error_type, code, message='', xid=0, data=b''):
        self.error_type = int(error_type)
        self.code = int(code)
        self.xid = xid
        self.data = data
        super().__init__(message or f'OpenFlow error type={self.error_type} code={self.code}')


class FlowModError(OpenFlowError):
    """FlowMod / TableMod rejected by the flow pipeline"""


class BufferUnknownError(OpenFlowError):
    """Packet-Out referenced a buffer id that is not live"""


class MessageError(OpenFlowError):
    """A single message is malformed; the connection survives"""


class PcapFormatError(SwitchError):
    """
    Malformed pcap capture

    Attributes:
        offset: Byte offset in the file where parsing failed
    """

    def __init__(self, message, offset):
        self.offset = offset
        super().__init__(f'{message} (at byte offset {offset})')


class ScriptTimeoutError(SwitchError):
    """
    A mock-controller script step did not complete in time

    Attributes:
        step: Index of the step that timed out
        transcript: Every message exchanged so far
    """

    def __init__(self, step, transcript):
        self.step = step
        self.transcript = list(transcript)
        lines = [f'  {direction} {message!r}' for direction, message in self.transcript]
        dump = '\n'.join(lines) if lines else '  <empty>'
        super().__init__(f'script step {step} timed out; transcript:\n{dump}')
