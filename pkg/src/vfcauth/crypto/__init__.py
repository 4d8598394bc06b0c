from vfcauth.crypto.ec import CURVES, P256, TOY, CurveId, CurveParams, Point, PointDecodeError, get_curve, scalar_mult
from vfcauth.crypto.encoding import FramingError, decode_uint, encode_uint, frame, unframe
from vfcauth.crypto.primitives import (
    DIGEST_SIZE,
    CryptoError,
    DecryptionError,
    HybridCiphertext,
    KeyPair,
    decode_scalar,
    encode_scalar,
    h1,
    h2,
    kdf,
    pk_decrypt,
    pk_encrypt,
    random_scalar,
    setup,
    xor32,
)

__all__ = [
    "CURVES", "P256", "TOY", "CurveId", "CurveParams", "Point", "PointDecodeError", "get_curve",
    "scalar_mult", "FramingError", "decode_uint", "encode_uint", "frame", "unframe", "DIGEST_SIZE",
    "CryptoError", "DecryptionError", "HybridCiphertext", "KeyPair", "decode_scalar",
    "encode_scalar", "h1", "h2", "kdf", "pk_decrypt", "pk_encrypt", "random_scalar", "setup",
    "xor32",
]
