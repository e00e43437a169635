"""Exception hierarchy shared by every crawler component."""


class CrawlError(Exception):
    """Base class for all errors raised by domaincrawl."""


class MalformedUrl(CrawlError, ValueError):
    pass


class DuplicateDomain(CrawlError):
    pass


class UnknownDomain(CrawlError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class UnknownUrl(CrawlError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class NoSurvivors(CrawlError):
    """Raised when the last live worker is asked to fail."""


class InvalidParams(CrawlError, ValueError):
    pass


class ConfigError(CrawlError):
    """Any problem with a crawl configuration (exit code 2 on the CLI)."""


class ParseError(ConfigError):
    def __init__(self, message, *, line=None, field=None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class InvariantViolation(ConfigError):
    pass
