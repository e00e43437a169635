import pytest
from hypothesis import given, strategies as st

from domaincrawl.errors import MalformedUrl
from domaincrawl.urls import (
    CanonicalUrl,
    canonicalize,
    host_of,
    remove_dot_segments,
    resolve,
    resolve_reference,
)

from rfc3986_cases import ALL, BASE, COMPAT


def test_canonicalize_lowercases_and_strips_default_port_and_fragment():
    u = canonicalize("HTTP://A.com:80/p#frag")
    assert (u.scheme, u.host, u.port, u.path, u.query) == ("http", "a.com", None, "/p", None)
    assert u.render() == "http://a.com/p"


def test_canonicalize_identity():
    assert canonicalize("http://a.com/p").render() == "http://a.com/p"


def test_canonicalize_dot_segments():
    # By hand: "/x/../y" -> "/x" + "/../y" pops "/x" -> "/y"
    assert canonicalize("http://a.com/x/../y").path == "/y"


@pytest.mark.parametrize("raw, rendered", [
    ("http://a.com", "http://a.com/"),
    ("https://a.com:443/x", "https://a.com/x"),
    ("https://a.com:80/x", "https://a.com:80/x"),
    ("http://user:pw@a.com/x", "http://a.com/x"),
    ("http://a.com/%7euser/%2f", "http://a.com/%7Euser/%2F"),
    ("http://a.com/p?b=%7e&a=1", "http://a.com/p?b=%7e&a=1"),
    ("http://a.com/p?", "http://a.com/p?"),
    ("  http://a.com/p\n", "http://a.com/p"),
    ("http://[::1]:8080/x", "http://[::1]:8080/x"),
    ("http://a.com./x", "http://a.com/x"),
])
def test_canonical_forms(raw, rendered):
    assert canonicalize(raw).render() == rendered


@pytest.mark.parametrize("raw", [
    "a.com/p", "ftp://a.com/", "mailto:x@a.com", "javascript:void(0)",
    "http:///p", "http://:80/p", "http://a.com:http/", "http://a.com:99999/", "//a.com/p",
])
def test_canonicalize_rejects(raw):
    with pytest.raises(MalformedUrl):
        canonicalize(raw)


def test_host_of():
    assert host_of(canonicalize("http://a.com/p")) == "a.com"
    assert host_of(canonicalize("http://A.COM/p")) == "a.com"
    assert host_of(canonicalize("https://b.org:8080/x")) == "b.org"


@pytest.mark.parametrize("path, expected", [
    ("/a/b/c/./../../g", "/a/g"),
    ("mid/content=5/../6", "mid/6"),
    ("/..", "/"),
    ("", ""),
])
def test_remove_dot_segments_rfc_examples(path, expected):
    assert remove_dot_segments(path) == expected


@pytest.mark.parametrize("ref, expected", ALL)
def test_resolve_reference_rfc_table(ref, expected):
    assert resolve_reference(BASE, ref) == expected


@pytest.mark.parametrize("ref, expected", COMPAT)
def test_resolve_reference_compat_mode(ref, expected):
    assert resolve_reference(BASE, ref, strict=False) == expected


def test_resolve_examples():
    base = canonicalize("http://a/b/c/d;p?q")
    assert resolve(base, "g").render() == "http://a/b/c/g"
    assert resolve(base, "../g").render() == "http://a/b/g"
    assert resolve(base, "http://x.com/z").render() == "http://x.com/z"


@pytest.mark.parametrize("ref", ["g:h", "http:g", "javascript:void(0)", "mailto:a@b.c"])
def test_resolve_rejects_non_http_targets(ref):
    with pytest.raises(MalformedUrl):
        resolve(canonicalize(BASE), ref)


# -- properties -------------------------------------------------------------

_seg_chars = st.sampled_from(list("abcXYZ019-_~;=") + ["%2e", "%7e", "%41"])
segment = st.one_of(st.just("."), st.just(".."), st.lists(_seg_chars, min_size=0, max_size=5).map("".join))
paths = st.lists(segment, max_size=6).map(lambda segs: "".join("/" + s for s in segs))
hosts = st.lists(st.text("abcDEFxyz09", min_size=1, max_size=6), min_size=1, max_size=3).map(".".join)
queries = st.one_of(st.none(), st.text("abc=&%/?.XY", max_size=8))
ports = st.one_of(st.none(), st.integers(1, 65535))


@st.composite
def raw_urls(draw):
    scheme = draw(st.sampled_from(["http", "HTTP", "https", "HtTpS"]))
    port = draw(ports)
    query = draw(queries)
    frag = draw(st.one_of(st.none(), st.text("ab/.", max_size=4)))
    out = f"{scheme}://{draw(hosts)}"
    if port is not None:
        out += f":{port}"
    out += draw(paths)
    if query is not None:
        out += "?" + query
    if frag is not None:
        out += "#" + frag
    return out


@given(raw_urls())
def test_round_trip_idempotent(raw):
    u = canonicalize(raw)
    assert canonicalize(u.render()) == u
    assert u.scheme == u.scheme.lower() and u.host == u.host.lower()
    assert not {".", ".."} & set(u.path.split("/"))
    assert u.path.startswith("/")


@given(raw_urls(), raw_urls())
def test_absolute_reference_wins(base_raw, ref_raw):
    base = canonicalize(base_raw)
    target = canonicalize(ref_raw)
    assert resolve(base, target.render()) == canonicalize(target.render())


@given(st.text(max_size=40))
def test_resolve_only_raises_malformed(ref):
    base = canonicalize("http://a.com/d/")
    try:
        out = resolve(base, ref)
    except MalformedUrl:
        return
    assert isinstance(out, CanonicalUrl)
    assert canonicalize(out.render()) == out
