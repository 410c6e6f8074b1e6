"""
Report upload keys and failure handling
"""

from datetime import datetime

from src.storage.s3_uploader import s3_key_for, upload_artifacts, upload_to_s3


class FakeS3:
    def __init__(self, fail=False):
        self.fail = fail
        self.calls = []

    def upload_file(self, filename, bucket, key, ExtraArgs=None):
        if self.fail:
            raise RuntimeError('access denied')
        self.calls.append((filename, bucket, key, ExtraArgs))


def test_date_partitioned_key():
    key = s3_key_for('/tmp/reports/bench.json', 'benchmarks/', when=datetime(2024, 3, 9))
    assert key == 'benchmarks/date=2024-03-09/bench.json'


def test_upload_attaches_string_metadata(tmp_path):
    path = tmp_path / 'bench.json'
    path.write_text('{}')
    client = FakeS3()
    uri = upload_to_s3(str(path), 'results', 'benchmarks', metadata={'pps': 1200}, client=client)
    [(_, bucket, key, extra)] = client.calls
    assert uri == f's3://results/{key}'
    assert bucket == 'results'
    assert extra == {'Metadata': {'pps': '1200'}}


def test_failed_upload_returns_none(tmp_path):
    path = tmp_path / 'bench.json'
    path.write_text('{}')
    assert upload_to_s3(str(path), 'results', 'benchmarks', client=FakeS3(fail=True)) is None


def test_upload_artifacts_maps_each_path(tmp_path):
    paths = []
    for name in ('a.json', 'b.pcap'):
        path = tmp_path / name
        path.write_bytes(b'x')
        paths.append(str(path))
    client = FakeS3()
    result = upload_artifacts(paths, 'results', 'runs', client=client)
    assert list(result) == paths
    assert all(uri.startswith('s3://results/runs/date=') for uri in result.values())
    assert [call[3] for call in client.calls] == [None, None]
