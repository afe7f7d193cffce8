from __future__ import annotations

import hashlib
import logging

import redis

from contextlib import contextmanager
from typing import Any, Callable, Mapping, Optional

from conekit.errors import StoreError
from conekit.models import canonical_json

logger = logging.getLogger(__name__)

KEY_PREFIX = 'conekit:result:'


class ResultStore:
    """
    Redis-backed cache of result documents keyed by the SHA-256 of the canonical request.

    The store only ever returns text it was given for the same request, so a run with a store produces the same bytes as a
    run without one.
    """

    client_factory: Callable[[], redis.Redis]
    prefix: str

    def __init__(self, client_factory: Callable[[], redis.Redis], prefix: str = KEY_PREFIX) -> None:
        """
        :param client_factory: callable returning a connected :py:class:`redis.Redis` client
        :param prefix: key prefix for stored documents
        """

        self.client_factory = client_factory
        self.prefix = prefix

    @classmethod
    def build_pool(cls, redis_uri: str) -> redis.ConnectionPool:
        """
        Build a :py:class:`redis.ConnectionPool` from a Redis URI (prefixed with ``redis://`` if not present)
        """

        if not redis_uri.startswith(('redis://', 'rediss://', 'unix://')):
            redis_uri = f'redis://{redis_uri}'

        return redis.ConnectionPool.from_url(redis_uri)

    @classmethod
    def from_uri(cls, redis_uri: str, prefix: str = KEY_PREFIX) -> ResultStore:
        try:
            pool = cls.build_pool(redis_uri)
        except Exception as ex:
            err_message = f'Unable to build Redis pool for "{redis_uri}": {ex}'
            logger.exception(err_message)
            raise StoreError(err_message, base_exception=ex, related_op='ResultStore.from_uri')

        return cls(lambda: redis.Redis(connection_pool=pool), prefix)

    @staticmethod
    def request_key(request: Mapping[str, Any]) -> str:
        return hashlib.sha256(canonical_json(request).encode('utf-8')).hexdigest()

    @contextmanager
    def wrapped_redis(self, op_name: str = None):
        op_name = op_name or 'N/A'

        try:
            r_conn = self.client_factory()
        except Exception as ex:
            err_message = f'Unable to build new Redis connection for "{op_name}": {ex}'
            logger.exception(err_message)
            raise StoreError(err_message, base_exception=ex, related_op=op_name)

        try:
            logger.debug(f'Executing Redis command for "{op_name}"...')
            yield r_conn
        except Exception as ex:
            err_message = f'Error executing Redis command "{op_name}": {ex}'
            logger.exception(err_message)
            raise StoreError(err_message, base_exception=ex, related_op=op_name)

    def fetch(self, request: Mapping[str, Any]) -> Optional[str]:
        key = f'{self.prefix}{self.request_key(request)}'

        with self.wrapped_redis(op_name=f'get(key="{key}")') as r_conn:
            raw = r_conn.get(key)

        if raw is None:
            return None
        return raw.decode('utf-8') if isinstance(raw, bytes) else raw

    def store(self, request: Mapping[str, Any], document: str) -> bool:
        key = f'{self.prefix}{self.request_key(request)}'

        with self.wrapped_redis(op_name=f'set(key="{key}")') as r_conn:
            return bool(r_conn.set(key, document.encode('utf-8')))
