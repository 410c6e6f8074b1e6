"""
Storage modules: pcap captures and S3 artefact upload
"""

from .pcap import PcapReader, PcapRecord, PcapWriter, read_frames, write_frames
from .s3_uploader import upload_to_s3, upload_artifacts

__all__ = ['PcapReader', 'PcapRecord', 'PcapWriter', 'read_frames', 'write_frames',
           'upload_to_s3', 'upload_artifacts']
