//! A reference dataset with scripted model behavior for end-to-end checks.
//!
//! Nineteen curated helper changes across five Python projects, a current-context quality gate
//! that drops two of them, and per-cell outputs for two models. The outputs are ordinary code
//! strings; every classification downstream comes from the real oracle. Commit ids are
//! synthetic.

use std::collections::BTreeSet;

use sha2::{Digest, Sha256};

use crate::builder::{build_sample, quality_gate, DiagnosticSample, GateDecision};
use crate::client::{MockScript, ScriptEntry};
use crate::condition::RetrievalCondition;
use crate::miner::{extract_signatures, signature_delta, ChangeKind, SignatureChange};
use crate::oracle::{CompletionRecord, SampleOracle};

pub const QWEN: &str = "Qwen2.5-Coder-7B-Instruct";
pub const GPT: &str = "gpt-4.1-mini";

struct Helper {
    seq: usize,
    repo: &'static str,
    path: &'static str,
    stale: &'static str,
    current: &'static str,
}

const HELPERS: &[Helper] = &[
    Helper {
        seq: 1,
        repo: "click",
        path: "src/click/_termui_impl.py",
        stale: r#"def _nullpager(
    stream: t.TextIO, generator: cabc.Iterable[str], color: bool | None
) -> None:
    """Simply print unformatted text.  This is the ultimate fallback."""
    for text in generator:
        if not color:
            text = strip_ansi(text)
        stream.write(text)
"#,
        current: r#"def _nullpager(stream: t.TextIO, color: bool | None) -> None:
    """Simply print unformatted text.  This is the ultimate fallback."""
    for text in _pending_chunks(stream):
        if not color:
            text = strip_ansi(text)
        stream.write(text)
"#,
    },
    Helper {
        seq: 2,
        repo: "click",
        path: "src/click/_termui_impl.py",
        stale: r#"def _pipepager(generator: cabc.Iterable[str], cmd: str, color: bool | None) -> None:
    """Page through text by feeding it to another program."""
    import subprocess

    c = subprocess.Popen(cmd, shell=True, stdin=subprocess.PIPE)
    stdin = t.cast(t.BinaryIO, c.stdin)
    for text in generator:
        if not color:
            text = strip_ansi(text)
        stdin.write(text.encode("utf-8", "replace"))
    stdin.close()
    c.wait()
"#,
        current: r#"def _pipepager(
    generator: cabc.Iterable[str],
    cmd: str,
    color: bool | None,
    env: cabc.Mapping[str, str] | None,
) -> None:
    """Page through text by feeding it to another program."""
    import subprocess

    c = subprocess.Popen(cmd, shell=True, stdin=subprocess.PIPE, env=env)
    stdin = t.cast(t.BinaryIO, c.stdin)
    for text in generator:
        if not color:
            text = strip_ansi(text)
        stdin.write(text.encode("utf-8", "replace"))
    stdin.close()
    c.wait()
"#,
    },
    Helper {
        seq: 3,
        repo: "click",
        path: "src/click/_termui_impl.py",
        stale: r#"def _tempfilepager(
    generator: cabc.Iterable[str], cmd: str, color: bool | None, encoding: str
) -> None:
    """Page through text by invoking a program on a temporary file."""
    import tempfile

    fd, filename = tempfile.mkstemp()
    text = "".join(generator)
    if not color:
        text = strip_ansi(text)
    with open_stream(filename, "wb")[0] as f:
        f.write(text.encode(encoding))
    try:
        os.system(f'{cmd} "{filename}"')
    finally:
        os.close(fd)
        os.unlink(filename)
"#,
        current: r#"def _tempfilepager(generator: cabc.Iterable[str], cmd: str, color: bool | None) -> None:
    """Page through text by invoking a program on a temporary file."""
    import tempfile

    fd, filename = tempfile.mkstemp()
    text = "".join(generator)
    if not color:
        text = strip_ansi(text)
    encoding = get_best_encoding(sys.stdout)
    with open_stream(filename, "wb")[0] as f:
        f.write(text.encode(encoding))
    try:
        os.system(f'{cmd} "{filename}"')
    finally:
        os.close(fd)
        os.unlink(filename)
"#,
    },
    Helper {
        seq: 4,
        repo: "flask",
        path: "src/flask/helpers.py",
        stale: r#"def get_load_dotenv(default: bool = True) -> bool:
    """Get whether the user has disabled loading default dotenv files."""
    val = os.environ.get("FLASK_SKIP_DOTENV")

    if not val:
        return default

    return val.lower() in ("0", "false", "no")
"#,
        current: r#"def get_load_dotenv(default: bool = True, environ: t.Mapping[str, str] | None = None) -> bool:
    """Get whether the user has disabled loading default dotenv files."""
    if environ is None:
        environ = os.environ
    val = environ.get("FLASK_SKIP_DOTENV")

    if not val:
        return default

    return val.lower() in ("0", "false", "no")
"#,
    },
    Helper {
        seq: 5,
        repo: "flask",
        path: "src/flask/cli.py",
        stale: r#"def find_app_by_string(module: ModuleType, app_name: str) -> Flask:
    """Check if the given string is a variable name or a function call."""
    from . import Flask

    try:
        expr = ast.parse(app_name.strip(), mode="eval").body
    except SyntaxError:
        raise NoAppException(f"Failed to parse {app_name!r} as an attribute name.") from None
    attr = getattr(module, expr.id)
    if isinstance(attr, Flask):
        return attr
    raise NoAppException(f"{app_name!r} is not a valid Flask application.")
"#,
        current: r#"def find_app_by_string(module: ModuleType, app_name: str, raise_if_not_found: bool) -> Flask | None:
    """Check if the given string is a variable name or a function call."""
    from . import Flask

    try:
        expr = ast.parse(app_name.strip(), mode="eval").body
    except SyntaxError:
        raise NoAppException(f"Failed to parse {app_name!r} as an attribute name.") from None
    attr = getattr(module, expr.id, None)
    if isinstance(attr, Flask):
        return attr
    if raise_if_not_found:
        raise NoAppException(f"{app_name!r} is not a valid Flask application.")
    return None
"#,
    },
    Helper {
        seq: 7,
        repo: "flask",
        path: "src/flask/json/provider.py",
        stale: r#"def _default(o: t.Any) -> t.Any:
    if isinstance(o, date):
        return http_date(o)

    if isinstance(o, (decimal.Decimal, uuid.UUID)):
        return str(o)

    raise TypeError(f"Object of type {type(o).__name__} is not JSON serializable")
"#,
        current: r#"def _default(o: t.Any, encoder: type[json.JSONEncoder], sort_keys: bool) -> t.Any:
    if isinstance(o, date):
        return http_date(o)

    if isinstance(o, (decimal.Decimal, uuid.UUID)):
        return str(o)

    if dataclasses and dataclasses.is_dataclass(o):
        return encoder(sort_keys=sort_keys).default(dataclasses.asdict(o))

    raise TypeError(f"Object of type {type(o).__name__} is not JSON serializable")
"#,
    },
    Helper {
        seq: 8,
        repo: "requests",
        path: "src/requests/auth.py",
        stale: r#"def _basic_auth_str(username, password):
    """Returns a Basic Auth string."""
    if isinstance(username, str):
        username = username.encode("latin1")

    if isinstance(password, str):
        password = password.encode("latin1")

    authstr = "Basic " + to_native_string(
        b64encode(b":".join((username, password))).strip()
    )

    return authstr
"#,
        current: r#"def _basic_auth_str(username, password, encoding):
    """Returns a Basic Auth string."""
    if isinstance(username, str):
        username = username.encode(encoding)

    if isinstance(password, str):
        password = password.encode(encoding)

    authstr = "Basic " + to_native_string(
        b64encode(b":".join((username, password))).strip()
    )

    return authstr
"#,
    },
    Helper {
        seq: 10,
        repo: "httpx",
        path: "httpx/_urls.py",
        stale: r#"def _merge_url(base_url: URL, url: URLTypes) -> URL:
    merge_url = URL(url)
    if merge_url.is_relative_url:
        merge_raw_path = base_url.raw_path + merge_url.raw_path.lstrip(b"/")
        return base_url.copy_with(raw_path=merge_raw_path)
    return merge_url
"#,
        current: r#"def _merge_url(
    base_url: URL,
    url: URLTypes,
    params: QueryParamTypes | None,
    fragment: str,
    strict: bool,
) -> URL:
    merge_url = URL(url, params=params)
    if strict and not merge_url.is_absolute_url and not base_url.is_absolute_url:
        raise InvalidURL("Cannot merge two relative URLs.")
    if merge_url.is_relative_url:
        merge_raw_path = base_url.raw_path + merge_url.raw_path.lstrip(b"/")
        merge_url = base_url.copy_with(raw_path=merge_raw_path)
    return merge_url.copy_with(fragment=fragment or None)
"#,
    },
    Helper {
        seq: 12,
        repo: "httpx",
        path: "httpx/_client.py",
        stale: r#"class Client(BaseClient):
    def _init_proxy_transport(
        self,
        proxy: Proxy,
        verify: VerifyTypes,
        cert: CertTypes | None,
        http2: bool,
    ) -> BaseTransport:
        return HTTPTransport(
            verify=verify,
            cert=cert,
            http2=http2,
            proxy=proxy,
        )
"#,
        current: r#"class Client(BaseClient):
    def _init_proxy_transport(
        self,
        proxy: Proxy,
        verify: VerifyTypes,
        cert: CertTypes | None,
        trust_env: bool,
        http2: bool,
    ) -> BaseTransport:
        return HTTPTransport(
            verify=verify,
            cert=cert,
            trust_env=trust_env,
            http2=http2,
            proxy=proxy,
        )
"#,
    },
    Helper {
        seq: 13,
        repo: "httpx",
        path: "httpx/_transports/default.py",
        stale: r#"def create_pool_transport(verify: VerifyTypes, cert: CertTypes | None, trust_env: bool) -> httpcore.ConnectionPool:
    ssl_context = create_ssl_context(verify=verify, cert=cert, trust_env=trust_env)
    return httpcore.ConnectionPool(ssl_context=ssl_context)
"#,
        current: r#"def create_pool_transport(
    verify: VerifyTypes, cert: CertTypes | None, trust_env: bool, http2: bool
) -> httpcore.ConnectionPool:
    ssl_context = create_ssl_context(verify=verify, cert=cert, trust_env=trust_env)
    return httpcore.ConnectionPool(ssl_context=ssl_context, http2=http2)
"#,
    },
    Helper {
        seq: 16,
        repo: "httpx",
        path: "httpx/_content.py",
        stale: r#"def encode_content(content: str | bytes | Iterable[bytes]) -> tuple[dict[str, str], SyncByteStream]:
    if isinstance(content, (bytes, str)):
        body = content.encode("utf-8") if isinstance(content, str) else content
        headers = {"Content-Length": str(len(body))} if body else {}
        return headers, ByteStream(body)
    return {"Transfer-Encoding": "chunked"}, IteratorByteStream(content)
"#,
        current: r#"def encode_content(
    content: str | bytes | Iterable[bytes], chunk_size: int
) -> tuple[dict[str, str], SyncByteStream]:
    if isinstance(content, (bytes, str)):
        body = content.encode("utf-8") if isinstance(content, str) else content
        headers = {"Content-Length": str(len(body))} if body else {}
        return headers, ByteStream(body)
    return {"Transfer-Encoding": "chunked"}, IteratorByteStream(content, chunk_size=chunk_size)
"#,
    },
    Helper {
        seq: 19,
        repo: "requests",
        path: "src/requests/utils.py",
        stale: r#"def get_auth_from_url(url):
    """Given a url with authentication components, extract them into a tuple of
    username,password.
    """
    parsed = urlparse(url)

    try:
        auth = (unquote(parsed.username), unquote(parsed.password))
    except (AttributeError, TypeError):
        auth = ("", "")

    return auth
"#,
        current: r#"def get_auth_from_url(url, netrc_file, raise_errors):
    """Given a url with authentication components, extract them into a tuple of
    username,password.
    """
    parsed = urlparse(url)

    try:
        auth = (unquote(parsed.username), unquote(parsed.password))
    except (AttributeError, TypeError):
        auth = get_netrc_auth(url, raise_errors=raise_errors, netrc_file=netrc_file) or ("", "")

    return auth
"#,
    },
    Helper {
        seq: 23,
        repo: "requests",
        path: "src/requests/sessions.py",
        stale: r#"class Session(SessionRedirectMixin):
    def get(self, url, **kwargs):
        r"""Sends a GET request. Returns :class:`Response` object."""

        kwargs.setdefault("allow_redirects", True)
        return self.request("GET", url, **kwargs)
"#,
        current: r#"class Session(SessionRedirectMixin):
    def get(self, url, params, **kwargs):
        r"""Sends a GET request. Returns :class:`Response` object."""

        kwargs.setdefault("allow_redirects", True)
        return self.request("GET", url, params=params, **kwargs)
"#,
    },
    Helper {
        seq: 24,
        repo: "rich",
        path: "rich/scope.py",
        stale: r#"def render_scope(
    scope: "Mapping[str, Any]",
    title: Optional[TextType],
    sort_keys: bool,
    indent_guides: bool,
    max_length: Optional[int],
) -> "ConsoleRenderable":
    """Render python variables in a given scope."""
    highlighter = ReprHighlighter()
    items_table = Table.grid(padding=(0, 1), expand=False)
    items_table.add_column(justify="right")
    for key, value in sorted(scope.items()) if sort_keys else scope.items():
        items_table.add_row(
            Text.assemble((key, "scope.key")),
            Pretty(value, highlighter=highlighter, indent_guides=indent_guides, max_length=max_length),
        )
    return Panel.fit(items_table, title=title, border_style="scope.border", padding=(0, 1))
"#,
        current: r#"def render_scope(
    scope: "Mapping[str, Any]",
    title: Optional[TextType],
    sort_keys: bool,
    indent_guides: bool,
    max_length: Optional[int],
    max_string: Optional[int],
) -> "ConsoleRenderable":
    """Render python variables in a given scope."""
    highlighter = ReprHighlighter()
    items_table = Table.grid(padding=(0, 1), expand=False)
    items_table.add_column(justify="right")
    for key, value in sorted(scope.items()) if sort_keys else scope.items():
        items_table.add_row(
            Text.assemble((key, "scope.key")),
            Pretty(
                value,
                highlighter=highlighter,
                indent_guides=indent_guides,
                max_length=max_length,
                max_string=max_string,
            ),
        )
    return Panel.fit(items_table, title=title, border_style="scope.border", padding=(0, 1))
"#,
    },
    Helper {
        seq: 26,
        repo: "rich",
        path: "rich/_wrap.py",
        stale: r#"def divide_line(text: str, width: int) -> list[int]:
    """Given a string of text, and a width (measured in cells), return a list
    of cell offsets which the string should be split at in order for it to fit
    within the given width.
    """
    break_positions: list[int] = []
    cell_offset = 0
    for start, _end, word in words(text):
        word_length = cell_len(word.rstrip())
        if cell_offset + word_length > width and start:
            break_positions.append(start)
            cell_offset = cell_len(word)
        else:
            cell_offset += cell_len(word)
    return break_positions
"#,
        current: r#"def divide_line(text: str, width: int, fold: bool) -> list[int]:
    """Given a string of text, and a width (measured in cells), return a list
    of cell offsets which the string should be split at in order for it to fit
    within the given width.
    """
    break_positions: list[int] = []
    cell_offset = 0
    for start, _end, word in words(text):
        word_length = cell_len(word.rstrip())
        if cell_offset + word_length > width and start:
            break_positions.append(start)
            cell_offset = cell_len(word)
        elif fold and word_length > width:
            break_positions.extend(fold_offsets(word, start, width))
            cell_offset = 0
        else:
            cell_offset += cell_len(word)
    return break_positions
"#,
    },
    Helper {
        seq: 27,
        repo: "rich",
        path: "rich/cells.py",
        stale: r#"def chop_cells(text: str, width: int) -> list[str]:
    """Split text into lines such that each line fits within the available (cell) width."""
    _get_character_cell_size = get_character_cell_size
    lines: list[list[str]] = [[]]
    append = lines[-1].append
    total_width = 0
    for character in text:
        cell_width = _get_character_cell_size(character)
        if total_width + cell_width > width:
            lines.append([character])
            append = lines[-1].append
            total_width = cell_width
        else:
            append(character)
            total_width += cell_width
    return ["".join(line) for line in lines]
"#,
        current: r#"def chop_cells(text: str, width: int, overflow: str) -> list[str]:
    """Split text into lines such that each line fits within the available (cell) width."""
    _get_character_cell_size = get_character_cell_size
    lines: list[list[str]] = [[]]
    append = lines[-1].append
    total_width = 0
    for character in text:
        cell_width = _get_character_cell_size(character)
        if total_width + cell_width > width:
            if overflow == "ellipsis":
                lines[-1][-1] = "…"
                break
            lines.append([character])
            append = lines[-1].append
            total_width = cell_width
        else:
            append(character)
            total_width += cell_width
    return ["".join(line) for line in lines]
"#,
    },
    Helper {
        seq: 28,
        repo: "rich",
        path: "rich/containers.py",
        stale: r#"def pad_line(line: "Text", width: int) -> "Text":
    """Pad a single line of text out to a given width."""
    if line.cell_len < width:
        line.pad_right(width - line.cell_len)
    return line
"#,
        current: r#"def pad_line(line: "Text", width: int, style: StyleType) -> "Text":
    """Pad a single line of text out to a given width."""
    if line.cell_len < width:
        line.append(" " * (width - line.cell_len), style=style)
    return line
"#,
    },
    Helper {
        seq: 29,
        repo: "rich",
        path: "rich/_loop.py",
        stale: r#"def loop_first_last(values: Iterable[T], strict: bool) -> Iterable[tuple[bool, bool, T]]:
    """Iterate and generate a tuple with a flag for first and last value."""
    iter_values = iter(values)
    try:
        previous_value = next(iter_values)
    except StopIteration:
        if strict:
            raise ValueError("empty iterable") from None
        return
    first = True
    for value in iter_values:
        yield first, False, previous_value
        first = False
        previous_value = value
    yield first, True, previous_value
"#,
        current: r#"def loop_first_last(values: Iterable[T]) -> Iterable[tuple[bool, bool, T]]:
    """Iterate and generate a tuple with a flag for first and last value."""
    iter_values = iter(values)
    try:
        previous_value = next(iter_values)
    except StopIteration:
        return
    first = True
    for value in iter_values:
        yield first, False, previous_value
        first = False
        previous_value = value
    yield first, True, previous_value
"#,
    },
    Helper {
        seq: 30,
        repo: "rich",
        path: "rich/markup.py",
        stale: r#"def render(markup: str, style: Union[str, Style]) -> Text:
    """Render console markup in to a Text instance."""
    if "[" not in markup:
        return Text(markup, style=style)
    text = Text(style=style)
    for position, plain_text, tag in _parse(markup):
        if plain_text is not None:
            text.append(plain_text)
    return text
"#,
        current: r#"def render(
    markup: str,
    style: Union[str, Style],
    emoji: bool,
    emoji_variant: Optional[EmojiVariant],
    end: str,
) -> Text:
    """Render console markup in to a Text instance."""
    emoji_replace = _emoji_replace
    if "[" not in markup:
        return Text(
            emoji_replace(markup, default_variant=emoji_variant) if emoji else markup,
            style=style,
            end=end,
        )
    text = Text(style=style, end=end)
    for position, plain_text, tag in _parse(markup):
        if plain_text is not None:
            text.append(emoji_replace(plain_text) if emoji else plain_text)
    return text
"#,
    },
];

/// Samples the quality gate drops: high-arity wrappers the gate model failed.
pub const GATE_EXCLUDED: [usize; 2] = [12, 24];

fn synthetic_commit(repo: &str, seq: usize, side: &str) -> String {
    let digest = Sha256::digest(format!("{repo}/{seq}/{side}").as_bytes());
    hex::encode(digest)[..40].to_string()
}

fn change_for(h: &Helper) -> SignatureChange {
    let pick = |src: &str| {
        extract_signatures(src, h.path)
            .expect("reference source parses")
            .pop()
            .expect("reference source defines a function")
    };
    let (stale_signature, current_signature) = (pick(h.stale), pick(h.current));
    SignatureChange {
        repo_name: h.repo.to_string(),
        file_path: h.path.to_string(),
        function_name: current_signature.function_name.clone(),
        parent_commit: synthetic_commit(h.repo, h.seq, "parent"),
        child_commit: synthetic_commit(h.repo, h.seq, "child"),
        signature_delta: signature_delta(&stale_signature.parameter_names, &current_signature.parameter_names),
        stale_signature,
        current_signature,
        change_kind: ChangeKind::SignatureChange,
    }
}

/// The curated signature changes with their sample sequence numbers.
pub fn curated_changes() -> Vec<(usize, SignatureChange)> {
    HELPERS.iter().map(|h| (h.seq, change_for(h))).collect()
}

/// All nineteen curated samples, before the quality gate.
pub fn curated_samples() -> Vec<DiagnosticSample> {
    curated_changes()
        .iter()
        .map(|(seq, c)| build_sample(c, *seq).expect("reference change builds"))
        .collect()
}

fn seq_of(sample: &DiagnosticSample) -> usize {
    sample
        .short_id()
        .trim_start_matches("sig-")
        .parse()
        .expect("numeric sample id")
}

/// What a scripted output does.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    CurrentCall,
    StaleCall,
    /// Defines the helper with its stale parameters, then calls it.
    StaleReconstruction,
    /// Calls the helper through a receiver, which the static oracle does not count.
    ReceiverCall,
    NoCall,
}

pub fn render_output(sample: &DiagnosticSample, shape: Shape, model: &str) -> String {
    let stale = &sample.oracle_metadata.stale_signature;
    let body = match shape {
        Shape::CurrentCall => format!("{}return {}\n", sample.local_context.prefix, sample.canonical_current_call()),
        Shape::StaleCall => format!("{}return {}\n", sample.local_context.prefix, sample.canonical_stale_call()),
        Shape::StaleReconstruction => format!(
            "def {}({}):\n    raise NotImplementedError\n\n\n{}return {}\n",
            stale.function_name,
            stale.call_parameters().join(", "),
            sample.local_context.prefix,
            sample.canonical_stale_call()
        ),
        Shape::ReceiverCall => format!(
            "{}return transport.{}\n",
            sample.local_context.prefix,
            sample.canonical_current_call()
        ),
        Shape::NoCall => format!("{}raise NotImplementedError\n", sample.local_context.prefix),
    };
    if model == GPT {
        format!("Here is the completed function:\n\n```python\n{body}```\n")
    } else {
        format!("```python\n{body}```")
    }
}

/// Output shape for one cell of the reference study.
pub fn shape_for(model: &str, seq: usize, condition: RetrievalCondition) -> Shape {
    use RetrievalCondition::*;
    use Shape::*;
    let in_set = |set: &[usize]| set.contains(&seq);
    let fail = if seq == 13 { ReceiverCall } else { NoCall };
    if GATE_EXCLUDED.contains(&seq) {
        // sensitivity rerun: sig-012 now passes with current context, sig-024 still fails
        return if seq == 12 && condition == CurrentContextOnly { CurrentCall } else { NoCall };
    }
    match (model, condition) {
        (_, NoRetrieval) => {
            if seq == 23 {
                CurrentCall
            } else {
                NoCall
            }
        }
        (QWEN, CurrentContextOnly) => CurrentCall,
        (QWEN, StaleContextOnly) => match seq {
            13 | 28 => fail,
            3 => StaleReconstruction,
            _ => StaleCall,
        },
        (QWEN, MixedCurrentTop1StaleTop2) if in_set(&[1, 2, 8, 10]) => StaleCall,
        (QWEN, MixedStaleTop1CurrentTop2) if in_set(&[1, 7, 10, 13]) => StaleCall,
        (QWEN, _) => CurrentCall,
        (_, CurrentContextOnly) if in_set(&[13, 26]) => fail,
        (_, CurrentContextOnly) => CurrentCall,
        (_, StaleContextOnly) => match seq {
            23 => CurrentCall,
            13 | 16 | 26 => fail,
            _ => StaleCall,
        },
        _ if in_set(&[1, 2, 3, 27, 28]) => StaleCall,
        _ if in_set(&[13, 26]) => fail,
        _ => CurrentCall,
    }
}

/// Mock script for `model` over every sample and condition.
pub fn script_for(model: &str, samples: &[DiagnosticSample]) -> MockScript {
    let mut entries = Vec::new();
    for s in samples {
        for c in RetrievalCondition::ALL {
            entries.push(ScriptEntry {
                sample_id: s.sample_id.clone(),
                condition: c,
                output: render_output(s, shape_for(model, seq_of(s), c), model),
            });
        }
    }
    MockScript {
        model_name: model.to_string(),
        default: None,
        entries,
    }
}

/// Original gate run: the gate model under current-only retrieval on all curated samples.
pub fn gate_rows(samples: &[DiagnosticSample]) -> Vec<CompletionRecord> {
    samples
        .iter()
        .map(|s| {
            let shape = if GATE_EXCLUDED.contains(&seq_of(s)) {
                Shape::NoCall
            } else {
                Shape::CurrentCall
            };
            let oracle = SampleOracle::new(s).expect("reference patterns compile");
            oracle.record(
                RetrievalCondition::CurrentContextOnly,
                QWEN,
                &s.repo_name,
                &render_output(s, shape, QWEN),
            )
        })
        .collect()
}

/// The seventeen gated evaluation samples and the gate's exclusions.
pub fn evaluation_samples() -> (Vec<DiagnosticSample>, Vec<GateDecision>) {
    let curated = curated_samples();
    quality_gate(&curated, &gate_rows(&curated)).expect("gate rows cover every sample")
}

/// Sample ids, as `sig-NNN`, in a set.
pub fn short_ids<'a>(ids: impl IntoIterator<Item = &'a String>) -> BTreeSet<String> {
    ids.into_iter()
        .map(|id| crate::builder::short_id(id).to_string())
        .collect()
}
