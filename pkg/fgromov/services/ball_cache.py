"""On-disk cache of enumerated balls"""

import logging
import os
import struct
import tempfile
from pathlib import Path
from typing import Optional

from fgromov.config import settings
from fgromov.models.ball import Ball
from fgromov.models.group import MarkedGroup
from fgromov.services.ball_service import BallService, ball_service
from fgromov.utils.errors import ValidationError

logger = logging.getLogger(__name__)

MAGIC = b"FGBALL1"


def default_cache_dir() -> Path:
    if settings.FGROMOV_CACHE:
        return Path(settings.FGROMOV_CACHE).expanduser()
    return Path.home() / ".cache" / "fgromov"


def serialize_ball(ball: Ball) -> bytes:
    """Header (magic, fingerprint, R, sphere sizes) then length-prefixed keys"""
    fingerprint = ball.group.fingerprint().encode("ascii")
    parts = [
        MAGIC,
        struct.pack(">H", len(fingerprint)),
        fingerprint,
        struct.pack(">I", ball.radius),
    ]
    parts.extend(struct.pack(">Q", size) for size in ball.sphere_sizes)
    for key in ball.keys:
        parts.append(struct.pack(">I", len(key)))
        parts.append(key)
    return b"".join(parts)


def deserialize_ball(group: MarkedGroup, data: bytes) -> Ball:
    if not data.startswith(MAGIC):
        raise ValidationError("not a ball cache file (bad magic)")
    pos = len(MAGIC)
    (fp_len,) = struct.unpack_from(">H", data, pos)
    pos += 2
    fingerprint = data[pos:pos + fp_len].decode("ascii")
    pos += fp_len
    if fingerprint != group.fingerprint():
        raise ValidationError("ball cache fingerprint does not match the group")
    (radius,) = struct.unpack_from(">I", data, pos)
    pos += 4
    sphere_sizes = list(struct.unpack_from(f">{radius + 1}Q", data, pos))
    pos += 8 * (radius + 1)
    keys = []
    for _ in range(sum(sphere_sizes)):
        (length,) = struct.unpack_from(">I", data, pos)
        pos += 4
        keys.append(data[pos:pos + length])
        pos += length
    if pos != len(data):
        raise ValidationError("ball cache file has trailing bytes")
    decode = group.backend.decode_key
    return Ball(group, radius, [decode(k) for k in keys], keys, sphere_sizes)


class BallCache:
    """Directory of `<fingerprint16>_R<R>.fgball` files.

    Writes go to a temp file in the same directory followed by an atomic
    rename, so concurrent readers never see a partial file.
    """

    def __init__(self, directory: Optional[Path] = None, service: Optional[BallService] = None):
        self.directory = Path(directory) if directory else default_cache_dir()
        self.service = service or ball_service

    def path_for(self, group: MarkedGroup, radius: int) -> Path:
        return self.directory / f"{group.fingerprint()[:16]}_R{radius}.fgball"

    def load(self, group: MarkedGroup, radius: int) -> Optional[Ball]:
        path = self.path_for(group, radius)
        if not path.exists():
            return None
        try:
            ball = deserialize_ball(group, path.read_bytes())
        except (ValidationError, struct.error) as e:
            logger.warning(f"ignoring unreadable cache file {path}: {e}")
            return None
        logger.info(f"loaded B({radius}) of {group.name} from {path}")
        return ball

    def store(self, ball: Ball) -> Path:
        self.directory.mkdir(parents=True, exist_ok=True)
        path = self.path_for(ball.group, ball.radius)
        fd, tmp = tempfile.mkstemp(prefix=".fgball-", dir=self.directory)
        try:
            with os.fdopen(fd, "wb") as f:
                f.write(serialize_ball(ball))
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        logger.debug(f"stored B({ball.radius}) of {ball.group.name} at {path}")
        return path

    def get_ball(self, group: MarkedGroup, radius: int) -> Ball:
        ball = self.load(group, radius)
        if ball is None:
            ball = self.service.enumerate_ball(group, radius)
            self.store(ball)
        return ball
