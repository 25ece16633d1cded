from .crc import crc_attach, crc_check, CRC16, CRC24A, CRC24B
from .turbo import turbo_encode, turbo_decode_streams, LEGAL_BLOCK_SIZES
from .rate_matching import rate_match, derate_match, mother_buffer_length
from .segmentation import segment_code_blocks, desegment_code_blocks
from .chain import TransportCoder, SoftBuffer, RV_SEQUENCE

__all__ = [
    "crc_attach",
    "crc_check",
    "CRC16",
    "CRC24A",
    "CRC24B",
    "turbo_encode",
    "turbo_decode_streams",
    "LEGAL_BLOCK_SIZES",
    "rate_match",
    "derate_match",
    "mother_buffer_length",
    "segment_code_blocks",
    "desegment_code_blocks",
    "TransportCoder",
    "SoftBuffer",
    "RV_SEQUENCE",
]
