"""Gymnasium-style client for the medgym wire protocol (v1).

Talks newline-delimited JSON to a `medgym serve` process, either spawned as a
subprocess on stdio (default) or reached over TCP.  Never imports the core
package; the line protocol is the only contract.
"""

from .remote import ProtocolError, RemoteEnv, VersionError, make

__all__ = ["make", "RemoteEnv", "ProtocolError", "VersionError"]
