"""Hand-authored issue corpora shared by parse-engine and acceptance tests."""
from collections import Counter

from skillscope.javasrc import ApiUsage


def usage(classes=(), methods=()):
    return ApiUsage(classes=Counter(classes), methods=Counter(methods))


def twelve_issue_corpus():
    """12 issues with hand-assigned API usages over the seed taxonomy.

    Issue 109 uses only unclassifiable identifiers, so it labels to the zero
    vector and must drop out of the built dataset.
    """
    db = usage(
        classes=["Connection", "Statement"],
        methods=[("executeQuery", "Statement"), ("createStatement", "Connection")],
    )
    io_files = usage(classes=["FileReader", "InputStream"], methods=[("read", "InputStream")])
    net = usage(classes=["Socket", "HttpClient"], methods=[("connect", "Socket")])
    ui = usage(classes=["Button", "Dialog"], methods=[("click", "Button")])
    crypto = usage(classes=["Cipher"], methods=[("encrypt", "Cipher")])
    logs = usage(classes=["Logger"], methods=[("debug", "Logger")])
    threads = usage(classes=["ThreadPoolExecutor"], methods=[("submit", "ThreadPoolExecutor")])
    nothing = usage(classes=["Zzqx", "Wvvt"], methods=[("qqq", "Zzqx")])

    return [
        (101, "Query results truncated", "SELECT rows drop after executeQuery on large tables", [db]),
        (102, "File reader leaks handles", "InputStream never closed when read fails", [io_files]),
        (103, "Socket reconnect loop", "connect storms the server after network blips", [net]),
        (104, "Dialog steals focus", "Modal dialog grabs focus from the editor button", [ui]),
        (105, "Cipher init slow", "encrypt takes seconds on first call", [crypto]),
        (106, "Debug logging floods disk", "logger writes gigabytes at debug level", [logs]),
        (107, "Executor starves small jobs", "thread pool submit ordering is unfair", [threads]),
        (108, "Query planner and file cache clash", "mixed workload between sql and file io", [db, io_files]),
        (109, "Mystery crash", "cannot reproduce, stack trace garbled", [nothing]),
        (110, "Login button mislabeled", "ui copy says sign in but button says login", [ui]),
        (111, "Statement pool exhausted", "connection pool hands out closed statements", [db]),
        (112, "Socket timeout misconfigured", "http client ignores connect timeout settings", [net]),
    ]
