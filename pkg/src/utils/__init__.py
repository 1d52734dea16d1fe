from .logger import Logger
from .seeding import SeedStreams
from .artifacts import ArtifactStore, artifact_name, sha256_file

__all__ = ['Logger', 'SeedStreams', 'ArtifactStore', 'artifact_name', 'sha256_file']
