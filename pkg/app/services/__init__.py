"""This file contains the services for the application."""

from app.services.channel_io import (
    export_channel_csv,
    ingest_channel_csv,
)
from app.services.experiment import ExperimentService

__all__ = ["ExperimentService", "export_channel_csv", "ingest_channel_csv"]
