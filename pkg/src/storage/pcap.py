"""
Classic pcap file reader and writer

Handles both byte orders and the nanosecond-resolution magic. Only the
Ethernet link type is accepted.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import BinaryIO, Iterator, Union

from src.models.errors import PcapFormatError

MAGIC_MICRO = 0xA1B2C3D4
MAGIC_NANO = 0xA1B23C4D
LINKTYPE_ETHERNET = 1

GLOBAL_HEADER_LEN = 24
RECORD_HEADER_LEN = 16


@dataclass(frozen=True)
class PcapRecord:
    """
    One captured frame

    Attributes:
        number: 1-based record index
        timestamp_ns: Capture time in nanoseconds since the epoch
        data: Captured octets
        original_length: Length of the frame on the wire
        offset: Byte offset of the record header in the file
    """

    number: int
    timestamp_ns: int
    data: bytes
    original_length: int
    offset: int


def _byte_order(raw_magic):
    for endian in ('<', '>'):
        (magic,) = struct.unpack(endian + 'I', raw_magic)
        if magic in (MAGIC_MICRO, MAGIC_NANO):
            return endian, magic == MAGIC_NANO
    return None, False


class PcapReader:
    """
    Iterate over the records of a pcap file

    Frames before a damaged record are yielded; the damaged record raises
    PcapFormatError naming its byte offset.

    Args:
        source: Path or binary file object
    """

    def __init__(self, source: Union[str, BinaryIO]):
        self._owns = isinstance(source, (str, bytes)) or hasattr(source, '__fspath__')
        self._file = open(source, 'rb') if self._owns else source
        header = self._file.read(GLOBAL_HEADER_LEN)
        if len(header) < GLOBAL_HEADER_LEN:
            self.close()
            raise PcapFormatError('file shorter than the pcap global header', 0)
        endian, nanosecond = _byte_order(header[:4])
        if endian is None:
            self.close()
            raise PcapFormatError(f'bad magic {header[:4].hex()}', 0)
        self.endian = endian
        self.nanosecond = nanosecond
        (self.version_major, self.version_minor, self.thiszone, self.sigfigs,
         self.snaplen, self.linktype) = struct.unpack(endian + 'HHiIII', header[4:])
        if self.linktype != LINKTYPE_ETHERNET:
            self.close()
            raise PcapFormatError(f'link type {self.linktype} is not Ethernet', 20)
        self._record = struct.Struct(endian + 'IIII')

    def __iter__(self) -> Iterator[PcapRecord]:
        offset = GLOBAL_HEADER_LEN
        number = 0
        while True:
            header = self._file.read(RECORD_HEADER_LEN)
            if not header:
                return
            if len(header) < RECORD_HEADER_LEN:
                raise PcapFormatError('truncated record header', offset)
            ts_sec, ts_frac, incl_len, orig_len = self._record.unpack(header)
            data = self._file.read(incl_len)
            if len(data) < incl_len:
                raise PcapFormatError(f'record declares {incl_len} bytes, {len(data)} present', offset)
            number += 1
            scale = 1 if self.nanosecond else 1000
            yield PcapRecord(number, ts_sec * 1_000_000_000 + ts_frac * scale, data, orig_len, offset)
            offset += RECORD_HEADER_LEN + incl_len

    def close(self):
        if self._owns:
            self._file.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class PcapWriter:
    """
    Write frames to a pcap file

    Args:
        target: Path or binary file object
        nanosecond: Use the nanosecond-resolution magic
        endian: '<' or '>' byte order
        snaplen: Advertised snapshot length
    """

    def __init__(self, target: Union[str, BinaryIO], nanosecond=False, endian='<', snaplen=65535):
        self._owns = isinstance(target, (str, bytes)) or hasattr(target, '__fspath__')
        self._file = open(target, 'wb') if self._owns else target
        self.nanosecond = nanosecond
        self.snaplen = snaplen
        self._record = struct.Struct(endian + 'IIII')
        magic = MAGIC_NANO if nanosecond else MAGIC_MICRO
        self._file.write(struct.pack(endian + 'IHHiIII', magic, 2, 4, 0, 0, snaplen, LINKTYPE_ETHERNET))
        self.count = 0

    def write(self, data, timestamp_ns=0):
        data = bytes(data)
        original_length = len(data)
        data = data[:self.snaplen]
        seconds, remainder = divmod(timestamp_ns, 1_000_000_000)
        fraction = remainder if self.nanosecond else remainder // 1000
        self._file.write(self._record.pack(seconds, fraction, len(data), original_length) + data)
        self.count += 1

    def close(self):
        if self._owns:
            self._file.close()
        else:
            self._file.flush()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_frames(path) -> list[bytes]:
    """Every frame of a capture (raises on the first damaged record)"""
    with PcapReader(path) as reader:
        return [record.data for record in reader]


def write_frames(path, frames, nanosecond=False, endian='<'):
    with PcapWriter(path, nanosecond=nanosecond, endian=endian) as writer:
        for index, frame in enumerate(frames):
            writer.write(frame, index * 1000)
