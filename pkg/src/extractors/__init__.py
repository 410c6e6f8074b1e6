"""
Header extractors for frames entering the switch
"""

from .header_extractor import parse, malicious_reasons, extract_layout

__all__ = ['parse', 'malicious_reasons', 'extract_layout']
