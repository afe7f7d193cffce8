import pytest

from pprint import pformat

from conekit.errors import StoreError
from conekit.helpers import KEY_PREFIX, ResultStore


def test_store_and_fetch(result_store):
    request = {'command': 'hull', 'window': {'box': [[0, 2], [0, 2]]}}

    res = result_store.fetch(request)
    assert res is None, f'Nothing stored yet but got: {res}'

    assert result_store.store(request, '{"status": "ok"}\n'), 'Bad return from store()'

    res = result_store.fetch(request)
    assert res == '{"status": "ok"}\n', f'Fetched document does not match stored one. Got: {res}'

    print(f'Received matching document back\n{pformat(res, indent=4)}')

    with result_store.wrapped_redis(op_name='keys(*)') as r_conn:
        keys = [key.decode('utf-8') for key in r_conn.keys('*')]
    assert keys == [f'{KEY_PREFIX}{ResultStore.request_key(request)}'], f'Unexpected keys: {keys}'


def test_request_key_is_canonical():
    a = ResultStore.request_key({'command': 'sail', 'budget': 4})
    b = ResultStore.request_key({'budget': 4, 'command': 'sail'})
    assert a == b, 'key order must not change the request key'
    assert len(a) == 64

    assert a != ResultStore.request_key({'command': 'sail', 'budget': 5})


def test_wrapped_redis_errors(result_store):
    def _broken():
        raise ConnectionError('no route to host')

    with pytest.raises(StoreError) as exc:
        with ResultStore(_broken).wrapped_redis(op_name='ping()'):
            pass
    assert exc.value.related_op == 'ping()'

    with pytest.raises(StoreError):
        with result_store.wrapped_redis(op_name='broken()'):
            raise ValueError('failed mid-command')


def test_build_pool():
    pool = ResultStore.build_pool('localhost:6380')
    assert pool.connection_kwargs['host'] == 'localhost'
    assert pool.connection_kwargs['port'] == 6380

    assert ResultStore.build_pool('redis://cache.local').connection_kwargs['host'] == 'cache.local'
