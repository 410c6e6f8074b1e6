"""
Command-line entry point: replay with capture upload
"""

import pytest

import ofswitch
from src.harness.frame_builder import FrameTemplate, build_frame
from src.storage.pcap import read_frames, write_frames


@pytest.fixture
def uploads(monkeypatch):
    calls = []

    def fake_upload(paths, bucket, prefix, metadata=None, client=None):
        calls.append((list(paths), bucket, prefix, metadata))
        return {path: f's3://{bucket}/{prefix}/{path}' for path in paths}

    monkeypatch.setattr(ofswitch, 'upload_artifacts', fake_upload)
    return calls


def _replay_args(tmp_path, bucket):
    capture = tmp_path / 'in.pcap'
    write_frames(capture, [build_frame(FrameTemplate(), 64)] * 5)
    settings = tmp_path / 'switch.env'
    lines = ['PORT_COUNT=2', f'PCAP_SINK_DIR={tmp_path / "captures"}', 'S3_PREFIX=runs']
    if bucket:
        lines.append(f'S3_BUCKET={bucket}')
    settings.write_text('\n'.join(lines) + '\n')
    return ['replay', str(capture), '--config', str(settings), '--upload']


def test_replay_uploads_port_captures(tmp_path, uploads):
    assert ofswitch.main(_replay_args(tmp_path, 'results')) == 0
    [(paths, bucket, prefix, _)] = uploads
    assert paths == [str(tmp_path / 'captures' / f'port{i}.pcap') for i in range(2)]
    assert (bucket, prefix) == ('results', 'runs')
    assert all(read_frames(path) == [] for path in paths)


def test_replay_upload_needs_bucket(tmp_path, uploads):
    assert ofswitch.main(_replay_args(tmp_path, None)) == 0
    assert uploads == []
