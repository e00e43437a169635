"""URL canonicalization and relative-reference resolution.

A :class:`CanonicalUrl` is the identity every deduplication step works on.
Its rendered form ``scheme://host[:port]path[?query]`` is the key used by the
frontier, the URL database and the page repository.

Canonical form:

* scheme and host lowercased, only ``http`` and ``https`` accepted
* default port (80 / 443) dropped, userinfo dropped
* dot-segments removed from the path, empty path becomes ``/``
* percent-encoded triplets in the path get uppercase hex digits
* query kept byte-for-byte, fragment discarded
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import NamedTuple, Optional

from .errors import MalformedUrl

SUPPORTED_SCHEMES = ("http", "https")
DEFAULT_PORTS = {"http": 80, "https": 443}

# Generic URI splitting regex (RFC 3986, appendix B).
_URI_RE = re.compile(r"^(([^:/?#]+):)?(//([^/?#]*))?([^?#]*)(\?([^#]*))?(#(.*))?", re.DOTALL)
_RELATIVE_RE = re.compile(r"^(//([^/?#]*))?([^?#]*)(\?([^#]*))?(#(.*))?", re.DOTALL)
_SCHEME_RE = re.compile(r"^[A-Za-z][A-Za-z0-9+.\-]*$")
_PCT_RE = re.compile(r"%([0-9a-fA-F]{2})")
_BAD_HOST_CHARS = set(" \t\r\n<>\"{}|\\^`%")
_STRIP = " \t\r\n\f"


class UriParts(NamedTuple):
    """The five generic components; ``None`` means the component is absent."""

    scheme: Optional[str]
    authority: Optional[str]
    path: str
    query: Optional[str]
    fragment: Optional[str]


def split_uri(text: str) -> UriParts:
    m = _URI_RE.match(text)
    scheme = m.group(2)
    if scheme is not None and not _SCHEME_RE.match(scheme):
        # "1abc:x" has no valid scheme; read it as a relative reference.
        m = _RELATIVE_RE.match(text)
        return UriParts(None, m.group(2), m.group(3), m.group(5), m.group(7))
    return UriParts(scheme, m.group(4), m.group(5), m.group(7), m.group(9))


def unsplit_uri(parts: UriParts) -> str:
    out = []
    if parts.scheme is not None:
        out.append(parts.scheme + ":")
    if parts.authority is not None:
        out.append("//" + parts.authority)
    out.append(parts.path)
    if parts.query is not None:
        out.append("?" + parts.query)
    if parts.fragment is not None:
        out.append("#" + parts.fragment)
    return "".join(out)


def remove_dot_segments(path: str) -> str:
    """Remove ``.`` and ``..`` segments exactly as RFC 3986 section 5.2.4 does."""
    inp = path
    out: list[str] = []
    while inp:
        if inp.startswith("../"):
            inp = inp[3:]
        elif inp.startswith("./"):
            inp = inp[2:]
        elif inp.startswith("/./"):
            inp = inp[2:]
        elif inp == "/.":
            inp = "/"
        elif inp.startswith("/../"):
            inp = inp[3:]
            if out:
                out.pop()
        elif inp == "/..":
            inp = "/"
            if out:
                out.pop()
        elif inp in (".", ".."):
            inp = ""
        else:
            start = 1 if inp.startswith("/") else 0
            cut = inp.find("/", start)
            if cut == -1:
                cut = len(inp)
            out.append(inp[:cut])
            inp = inp[cut:]
    return "".join(out)


def _merge(base: UriParts, ref_path: str) -> str:
    if base.authority is not None and base.path == "":
        return "/" + ref_path
    cut = base.path.rfind("/")
    return base.path[: cut + 1] + ref_path


def resolve_reference(base: str, reference: str, strict: bool = True) -> str:
    """Plain RFC 3986 reference resolution on strings, no canonicalization.

    With ``strict=False`` a reference whose scheme equals the base scheme is
    treated as relative (the backwards-compatible parser behaviour).
    """
    b = split_uri(base)
    r = split_uri(reference)
    scheme = r.scheme
    if not strict and scheme is not None and b.scheme is not None and scheme.lower() == b.scheme.lower():
        scheme = None
    if scheme is not None:
        t = UriParts(scheme, r.authority, remove_dot_segments(r.path), r.query, r.fragment)
    elif r.authority is not None:
        t = UriParts(b.scheme, r.authority, remove_dot_segments(r.path), r.query, r.fragment)
    elif r.path == "":
        query = r.query if r.query is not None else b.query
        t = UriParts(b.scheme, b.authority, b.path, query, r.fragment)
    elif r.path.startswith("/"):
        t = UriParts(b.scheme, b.authority, remove_dot_segments(r.path), r.query, r.fragment)
    else:
        path = remove_dot_segments(_merge(b, r.path))
        t = UriParts(b.scheme, b.authority, path, r.query, r.fragment)
    return unsplit_uri(t)


@dataclass(frozen=True, order=True)
class CanonicalUrl:
    scheme: str
    host: str
    port: Optional[int]
    path: str
    query: Optional[str] = None

    def render(self) -> str:
        port = f":{self.port}" if self.port is not None else ""
        query = f"?{self.query}" if self.query is not None else ""
        return f"{self.scheme}://{self.host}{port}{self.path}{query}"

    def __str__(self) -> str:
        return self.render()


def _split_host_port(hostport: str, raw: str) -> tuple[str, Optional[int]]:
    if hostport.startswith("["):
        end = hostport.find("]")
        if end == -1:
            raise MalformedUrl(f"unterminated IPv6 literal in {raw!r}")
        host, rest = hostport[: end + 1], hostport[end + 1:]
        if rest and not rest.startswith(":"):
            raise MalformedUrl(f"junk after IPv6 literal in {raw!r}")
        port_text = rest[1:] if rest else ""
    else:
        host, _, port_text = hostport.partition(":")
    if port_text == "":
        return host, None
    if not port_text.isdigit() or not port_text.isascii():
        raise MalformedUrl(f"bad port {port_text!r} in {raw!r}")
    port = int(port_text)
    if port > 65535:
        raise MalformedUrl(f"port out of range in {raw!r}")
    return host, port


def _canonical_from_parts(parts: UriParts, raw: str) -> CanonicalUrl:
    if parts.scheme is None:
        raise MalformedUrl(f"no scheme: {raw!r}")
    scheme = parts.scheme.lower()
    if scheme not in SUPPORTED_SCHEMES:
        raise MalformedUrl(f"unsupported scheme {scheme!r}: {raw!r}")
    if parts.authority is None:
        raise MalformedUrl(f"empty host: {raw!r}")
    hostport = parts.authority.rpartition("@")[2]
    host, port = _split_host_port(hostport, raw)
    host = host.lower()
    if host.endswith(".") and len(host) > 1:
        host = host.rstrip(".")
    if not host or host == "[]":
        raise MalformedUrl(f"empty host: {raw!r}")
    if _BAD_HOST_CHARS.intersection(host):
        raise MalformedUrl(f"invalid host {host!r}")
    if port == DEFAULT_PORTS[scheme]:
        port = None
    path = remove_dot_segments(parts.path)
    path = _PCT_RE.sub(lambda m: "%" + m.group(1).upper(), path)
    if path == "":
        path = "/"
    return CanonicalUrl(scheme, host, port, path, parts.query)


def canonicalize(raw: str) -> CanonicalUrl:
    """Parse an absolute http(s) URL string into its canonical form."""
    if isinstance(raw, CanonicalUrl):
        return raw
    text = raw.strip(_STRIP)
    return _canonical_from_parts(split_uri(text), raw)


def resolve(base: CanonicalUrl, reference: str) -> CanonicalUrl:
    """Resolve an href found on ``base`` to an absolute canonical URL."""
    ref = reference.strip(_STRIP)
    target = resolve_reference(base.render(), ref)
    return _canonical_from_parts(split_uri(target), reference)


def host_of(url: CanonicalUrl) -> str:
    return url.host
