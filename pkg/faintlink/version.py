from collections import UserString
from pathlib import Path
from typing import Optional

UNKNOWN_VERSION = '0.0.unknown'


class VersionProxy(UserString):
    """
    Lazily resolved package version, backed by setuptools-scm.

    The version string is looked up the first time it is used, in order:

    1. setuptools-scm, in a git checkout or an archive with
       ``.git_archival.txt``;
    2. the ``_version.py`` written by setuptools-scm at build time;
    3. ``0.0.unknown``.

    Run records embed this string in their JSON sidecar.
    """
    def __init__(self):
        self._version = None

    def _from_scm(self) -> Optional[str]:
        repo_root = Path(__file__).resolve().parent.parent
        markers = (repo_root / '.git', repo_root / '.git_archival.txt')
        if not any(marker.exists() for marker in markers):
            return None
        try:
            from setuptools_scm import get_version
            return get_version(root='..', relative_to=__file__)
        except (ImportError, LookupError):
            return None

    def _from_build(self) -> Optional[str]:
        try:
            from ._version import version
        except ImportError:
            return None
        return version

    @property
    def data(self) -> str:
        if self._version is None:
            self._version = (self._from_scm() or self._from_build()
                             or UNKNOWN_VERSION)
        return self._version


__version__ = version = VersionProxy()
