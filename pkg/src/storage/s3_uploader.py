"""
S3 upload of benchmark reports and captures
"""

import os
from datetime import datetime

import boto3

from src.utils.logger import SwitchLogger

log = SwitchLogger(__name__, prefix='[s3] ')


def s3_key_for(local_filename, prefix, when=None):
    """
    S3 key with date-based partitioning: prefix/date=YYYY-MM-DD/filename
    """
    date_str = (when or datetime.now()).strftime('%Y-%m-%d')
    return f"{prefix.rstrip('/')}/date={date_str}/{os.path.basename(local_filename)}"


def upload_to_s3(local_filename, bucket, prefix, metadata=None, client=None):
    """
    Upload file to S3 with date-based partitioning

    Args:
        local_filename: Local file path
        bucket: S3 bucket name
        prefix: S3 key prefix
        metadata: Dictionary of metadata to attach
        client: boto3 S3 client (created when omitted)

    Returns:
        str: S3 URI if successful, None if failed
    """
    log.info(f'uploading {local_filename} to s3://{bucket}/{prefix}')

    try:
        s3_client = client or boto3.client('s3')
        s3_key = s3_key_for(local_filename, prefix)

        extra_args = {}
        if metadata:
            extra_args['Metadata'] = {str(k): str(v) for k, v in metadata.items()}

        s3_client.upload_file(
            local_filename,
            bucket,
            s3_key,
            ExtraArgs=extra_args if extra_args else None
        )

        s3_uri = f"s3://{bucket}/{s3_key}"
        log.success(f'upload successful: {s3_uri}')
        return s3_uri

    except Exception as e:
        log.error(f'S3 upload failed: {e}; local file kept at {local_filename}')
        return None


def upload_artifacts(paths, bucket, prefix, metadata=None, client=None):
    """
    Upload a benchmark's report and capture files

    Returns:
        dict: local path -> S3 URI (None for failed uploads)
    """
    s3_client = client or boto3.client('s3')
    return {path: upload_to_s3(path, bucket, prefix, metadata, s3_client) for path in paths}
