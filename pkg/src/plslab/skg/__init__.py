"""Secret key generation from reciprocal channel observations."""

from plslab.skg.codes import BlockCode, ProductCode, hamming_code, make_code
from plslab.skg.hybrid import (
    Cipher,
    HmacSha256,
    HybridMessage,
    Mac,
    XorStreamCipher,
    hybrid_receive,
    hybrid_send,
    receive_with,
)
from plslab.skg.pipeline import (
    DIGEST_BITS,
    Quantizer,
    SkgSession,
    bit_digest,
    max_key_len,
    privacy_amplify,
    quantize,
    quantize_pair,
    reconcile,
    reconciliation_leakage,
    run_skg,
    skg_rate,
)

__all__ = [
    "BlockCode", "ProductCode", "hamming_code", "make_code",
    "Cipher", "Mac", "XorStreamCipher", "HmacSha256", "HybridMessage",
    "hybrid_send", "hybrid_receive", "receive_with",
    "DIGEST_BITS", "Quantizer", "SkgSession", "bit_digest", "max_key_len",
    "privacy_amplify", "quantize", "quantize_pair", "reconcile",
    "reconciliation_leakage", "run_skg", "skg_rate",
]
