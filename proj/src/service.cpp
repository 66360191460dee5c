#include "mathfind/service.hpp"

#include <atomic>
#include <chrono>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "mathfind/error.hpp"

namespace mathfind {

using nlohmann::json;

namespace {

std::string dump(const json& j) { return j.dump(-1, ' ', false, json::error_handler_t::replace); }

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(dump(body), "application/json; charset=utf-8");
}

void send_error(httplib::Response& res, int status, const std::string& message,
                std::optional<std::size_t> offset = std::nullopt) {
    json body = {{"error", message}};
    if (offset) body["offset"] = *offset;
    send_json(res, status, body);
}

// Integer query parameter in [lo, hi]; nullopt when malformed.
std::optional<std::size_t> int_param(const httplib::Request& req, const char* name,
                                     std::size_t fallback) {
    if (!req.has_param(name)) return fallback;
    const std::string v = req.get_param_value(name);
    if (v.empty() || v.size() > 9 || v.find_first_not_of("0123456789") != std::string::npos)
        return std::nullopt;
    return static_cast<std::size_t>(std::stoul(v));
}

thread_local std::chrono::steady_clock::time_point request_start;

}  // namespace

std::pair<std::string, int> parse_bind_address(const std::string& bind) {
    auto colon = bind.rfind(':');
    if (colon == std::string::npos) throw std::invalid_argument("bind address needs host:port");
    std::string host = bind.substr(0, colon);
    std::string port = bind.substr(colon + 1);
    if (host.size() >= 2 && host.front() == '[' && host.back() == ']') host = host.substr(1, host.size() - 2);
    if (host.empty()) host = "0.0.0.0";
    if (port.empty() || port.size() > 5 || port.find_first_not_of("0123456789") != std::string::npos)
        throw std::invalid_argument("bad port in bind address: " + bind);
    int p = std::stoi(port);
    if (p > 65535) throw std::invalid_argument("bad port in bind address: " + bind);
    return {host, p};
}

std::string search_response_json(const std::string& query, const SearchResponse& response,
                                 double took_ms) {
    json results = json::array();
    for (const auto& r : response.results) {
        json highlights = json::array();
        for (const auto& h : r.highlights)
            highlights.push_back(
                {{"start", h.span.start}, {"end", h.span.end}, {"kind", to_string(h.kind)}});
        results.push_back({{"doc_id", r.doc_id},
                           {"score", r.score},
                           {"title", r.title},
                           {"path", r.path},
                           {"snippet", r.snippet},
                           {"highlights", std::move(highlights)}});
    }
    json body = {{"query_echo", query},
                 {"total_hits", response.total_hits},
                 {"took_ms", took_ms},
                 {"results", std::move(results)}};
    return dump(body);
}

struct SearchService::Impl {
    ServiceOptions options;
    httplib::Server server;
    int bound_port = -1;
    std::atomic<bool> run_called{false};
    std::atomic<bool> stop_requested{false};
    std::atomic<bool> run_finished{false};

    mutable std::mutex mutex;
    std::shared_ptr<const IndexReader> reader;
    std::jthread loader;
    std::mutex log_mutex;

    std::shared_ptr<const IndexReader> snapshot() const {
        std::lock_guard lock(mutex);
        return reader;
    }

    void log(const std::string& line) {
        if (!options.access_log) return;
        std::lock_guard lock(log_mutex);
        *options.access_log << line << '\n' << std::flush;
    }

    void handle_search(const httplib::Request& req, httplib::Response& res) {
        auto start = std::chrono::steady_clock::now();
        auto index = snapshot();
        if (!index) return send_error(res, 503, "index is loading");
        std::string q = req.get_param_value("q");
        std::string format = req.has_param("format") ? req.get_param_value("format") : "latex";
        QueryFormat qf;
        if (format == "latex")
            qf = QueryFormat::latex;
        else if (format == "mathml")
            qf = QueryFormat::mathml;
        else
            return send_error(res, 400, "format must be latex or mathml", 0);
        auto k = int_param(req, "k", 10);
        auto offset = int_param(req, "offset", 0);
        if (!k || *k < 1) return send_error(res, 400, "k must be a positive integer", 0);
        if (!offset) return send_error(res, 400, "offset must be a non-negative integer", 0);
        Query query;
        try {
            query = parse_query(q, qf, index->config());
        } catch (const PositionedError& e) {
            return send_error(res, 400, e.what(), e.position());
        }
        SearchResponse response = execute(*index, query, std::min<std::size_t>(*k, 100), *offset);
        double took =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        res.status = 200;
        res.set_content(search_response_json(q, response, took), "application/json; charset=utf-8");
    }

    void handle_doc(const httplib::Request& req, httplib::Response& res) {
        auto index = snapshot();
        if (!index) return send_error(res, 503, "index is loading");
        const std::string& digits = req.matches[1].str();
        if (digits.size() > 10) return send_error(res, 404, "document not found");
        auto id = std::stoull(digits);
        if (id >= index->document_count()) return send_error(res, 404, "document not found");
        DocumentRecord rec = index->doc(static_cast<DocId>(id));
        json formulae = json::array();
        for (const auto& s : rec.formulae) formulae.push_back({{"start", s.start}, {"end", s.end}});
        send_json(res, 200,
                  {{"doc_id", rec.doc_id},
                   {"title", rec.title},
                   {"path", rec.path},
                   {"body", rec.stored_body},
                   {"formulae", std::move(formulae)}});
    }

    void install_routes() {
        server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                    {"Access-Control-Allow-Methods", "GET, OPTIONS"},
                                    {"Access-Control-Allow-Headers", "Content-Type"}});
        server.set_pre_routing_handler([](const httplib::Request&, httplib::Response&) {
            request_start = std::chrono::steady_clock::now();
            return httplib::Server::HandlerResponse::Unhandled;
        });
        server.set_logger([this](const httplib::Request& req, const httplib::Response& res) {
            double took = std::chrono::duration<double, std::milli>(
                              std::chrono::steady_clock::now() - request_start)
                              .count();
            std::ostringstream line;
            line << req.method << ' ' << req.path << ' ' << res.status << ' ' << std::fixed
                 << std::setprecision(1) << took << "ms";
            log(line.str());
        });
        server.set_exception_handler(
            [](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
                std::string what = "internal error";
                try {
                    std::rethrow_exception(ep);
                } catch (const std::exception& e) {
                    what = e.what();
                } catch (...) {
                }
                send_error(res, 500, what);
            });

        server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
        server.Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
            auto index = snapshot();
            if (!index) return send_json(res, 503, {{"status", "loading"}});
            send_json(res, 200, {{"status", "ok"}, {"documents", index->document_count()}});
        });
        server.Get("/api/search",
                   [this](const httplib::Request& req, httplib::Response& res) { handle_search(req, res); });
        server.Get(R"(/api/doc/(\d+))",
                   [this](const httplib::Request& req, httplib::Response& res) { handle_doc(req, res); });

        if (options.ui_dir && server.set_mount_point("/", options.ui_dir->string())) return;
        server.Get("/", [](const httplib::Request&, httplib::Response& res) {
            res.set_content(std::string(builtin_ui_page()), "text/html; charset=utf-8");
        });
    }
};

SearchService::SearchService(ServiceOptions options) : impl_(std::make_unique<Impl>()) {
    impl_->options = std::move(options);
    impl_->install_routes();
}

SearchService::~SearchService() {
    stop();
}

void SearchService::load_index() {
    auto reader = std::make_shared<const IndexReader>(IndexReader::open(impl_->options.index_dir));
    std::lock_guard lock(impl_->mutex);
    impl_->reader = std::move(reader);
}

void SearchService::load_index_async() {
    impl_->loader = std::jthread([this] {
        try {
            load_index();
        } catch (const std::exception& e) {
            impl_->log(std::string("index load failed: ") + e.what());
        }
    });
}

bool SearchService::ready() const { return impl_->snapshot() != nullptr; }

bool SearchService::bind() {
    auto& im = *impl_;
    if (im.options.port == 0) {
        im.bound_port = im.server.bind_to_any_port(im.options.host);
        return im.bound_port > 0;
    }
    if (!im.server.bind_to_port(im.options.host, im.options.port)) return false;
    im.bound_port = im.options.port;
    return true;
}

int SearchService::port() const { return impl_->bound_port; }

void SearchService::run() {
    impl_->run_called = true;
    if (!impl_->stop_requested) impl_->server.listen_after_bind();
    impl_->run_finished = true;
}

// httplib ignores stop() until the accept loop is up, so a stop racing a
// fresh run() waits for it.
void SearchService::stop() {
    impl_->stop_requested = true;
    if (!impl_->run_called) return;
    while (!impl_->server.is_running() && !impl_->run_finished)
        std::this_thread::sleep_for(std::chrono::milliseconds(1));
    impl_->server.stop();
}

std::string_view builtin_ui_page() {
    return R"html(<!DOCTYPE html>
<html lang="en">
<head>
<meta charset="utf-8">
<title>mathfind</title>
<style>
body { font-family: sans-serif; max-width: 52rem; margin: 2rem auto; padding: 0 1rem; }
form { display: flex; gap: .5rem; }
input[type=text] { flex: 1; padding: .4rem; }
.hit { margin: 1.2rem 0; }
.hit .meta { color: #666; font-size: .85rem; }
mark { background: #ffe58a; }
.math-hit { border: 2px solid #d08700; border-radius: 3px; padding: 0 2px; }
.snippet { white-space: pre-wrap; }
#pager button { margin-right: .5rem; }
.error { color: #b00; }
</style>
</head>
<body>
<h1>mathfind</h1>
<form id="form">
  <input type="text" id="q" placeholder="text and $\frac{a}{b}$">
  <select id="format"><option value="latex">LaTeX</option><option value="mathml">MathML</option></select>
  <button type="submit">Search</button>
</form>
<p id="status"></p>
<div id="results"></div>
<div id="pager"></div>
<script>
const K = 10;
let inflight = null;
const $ = (id) => document.getElementById(id);

function escapeText(s) {
  return s.replace(/[&<>]/g, (c) => ({ '&': '&amp;', '<': '&lt;', '>': '&gt;' }[c]));
}

function renderSnippet(snippet, highlights) {
  const bytes = new TextEncoder().encode(snippet);
  const dec = new TextDecoder();
  let out = '', pos = 0;
  for (const h of highlights) {
    if (h.start < pos) continue;
    out += escapeText(dec.decode(bytes.slice(pos, h.start)));
    const part = dec.decode(bytes.slice(h.start, h.end));
    out += h.kind === 'math' ? '<span class="math-hit">' + part + '</span>'
                             : '<mark>' + escapeText(part) + '</mark>';
    pos = h.end;
  }
  return out + escapeText(dec.decode(bytes.slice(pos)));
}

function readState() {
  const p = new URLSearchParams(location.search);
  return { q: p.get('q') || '', format: p.get('format') || 'latex', page: Number(p.get('page') || 0) };
}

async function search(state, push) {
  $('q').value = state.q;
  $('format').value = state.format;
  if (push) history.pushState(null, '', '?' + new URLSearchParams({ q: state.q, format: state.format, page: state.page }));
  if (!state.q) return;
  if (inflight) inflight.abort();
  inflight = new AbortController();
  const params = new URLSearchParams({ q: state.q, format: state.format, k: K, offset: state.page * K });
  try {
    const res = await fetch('/api/search?' + params, { signal: inflight.signal });
    const body = await res.json();
    if (!res.ok) {
      $('status').innerHTML = '<span class="error">' + escapeText(body.error || 'error') + '</span>';
      $('results').innerHTML = '';
      $('pager').innerHTML = '';
      return;
    }
    $('status').textContent = body.total_hits + ' hits in ' + body.took_ms.toFixed(1) + ' ms';
    $('results').innerHTML = body.results.map((r) =>
      '<div class="hit"><div><b>' + escapeText(r.title) + '</b> <span class="meta">' +
      r.score.toFixed(4) + ' ' + escapeText(r.path) + '</span></div><div class="snippet">' +
      renderSnippet(r.snippet, r.highlights) + '</div></div>').join('');
    const pages = Math.ceil(body.total_hits / K);
    let pager = '';
    if (state.page > 0) pager += '<button data-page="' + (state.page - 1) + '">Previous</button>';
    if (state.page + 1 < pages) pager += '<button data-page="' + (state.page + 1) + '">Next</button>';
    $('pager').innerHTML = pager;
  } catch (e) {
    if (e.name !== 'AbortError') $('status').textContent = String(e);
  }
}

$('form').addEventListener('submit', (ev) => {
  ev.preventDefault();
  search({ q: $('q').value, format: $('format').value, page: 0 }, true);
});
$('pager').addEventListener('click', (ev) => {
  const page = ev.target.dataset.page;
  if (page !== undefined) search({ ...readState(), page: Number(page) }, true);
});
window.addEventListener('popstate', () => search(readState(), false));
search(readState(), false);
</script>
</body>
</html>
)html";
}

}  // namespace mathfind
