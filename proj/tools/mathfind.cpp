#include <signal.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <iterator>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "mathfind/canonicalize.hpp"
#include "mathfind/corpus_gen.hpp"
#include "mathfind/error.hpp"
#include "mathfind/formula_pipeline.hpp"
#include "mathfind/indexer.hpp"
#include "mathfind/latex.hpp"
#include "mathfind/search.hpp"
#include "mathfind/service.hpp"

namespace fs = std::filesystem;
using namespace mathfind;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitIndex = 2;

std::string read_stdin() {
    return {std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>()};
}

std::string trim(std::string s) {
    auto ws = [](unsigned char c) { return std::isspace(c); };
    while (!s.empty() && ws(s.back())) s.pop_back();
    std::size_t i = 0;
    while (i < s.size() && ws(s[i])) ++i;
    return s.substr(i);
}

void print_stats_table(const IndexStats& s) {
    std::printf("%-10s %15s %20s %20s %12s\n", "Documents", "Input formulae", "Indexed subformulae",
                "Real (wall clock) s", "CPU s");
    std::printf("%-10llu %15llu %20llu %20.3f %12.3f\n",
                static_cast<unsigned long long>(s.documents),
                static_cast<unsigned long long>(s.input_formulae),
                static_cast<unsigned long long>(s.indexed_subformulae), s.wall_time_seconds,
                s.cpu_time_seconds);
}

// Snippet on one line with `>>…<<` around every highlight.
std::string mark_snippet(const SearchResult& r, bool color) {
    std::string out;
    std::size_t pos = 0;
    const char* open = color ? "\033[1;33m>>" : ">>";
    const char* close = color ? "<<\033[0m" : "<<";
    for (const auto& h : r.highlights) {
        if (h.span.start < pos) continue;
        out.append(r.snippet, pos, h.span.start - pos);
        out += open;
        out.append(r.snippet, h.span.start, h.span.size());
        out += close;
        pos = h.span.end;
    }
    out.append(r.snippet, pos);
    std::string flat;
    bool space = false;
    for (char c : out) {
        if (c == '\n' || c == '\r' || c == '\t' || c == ' ') {
            space = true;
            continue;
        }
        if (space && !flat.empty()) flat.push_back(' ');
        space = false;
        flat.push_back(c);
    }
    return flat;
}

int run_index(const std::string& dataset, const std::string& index_dir, IndexOptions options) {
    options.on_skip = [](const fs::path& p, const std::string& why) {
        std::cerr << "skipped " << p.string() << ": " << why << '\n';
    };
    try {
        IndexReport report = index_directory(dataset, index_dir, options);
        print_stats_table(report.stats);
        if (report.skipped) std::printf("%zu of %zu files skipped\n", report.skipped, report.files);
        return 0;
    } catch (const EmptyDataset& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const IndexExists& e) {
        std::cerr << "error: " << e.what() << " (use --overwrite)\n";
        return kExitIndex;
    } catch (const IoFailure& e) {
        // An unreadable dataset is a usage error; anything else concerns the index.
        std::error_code ec;
        std::cerr << "error: " << e.what() << '\n';
        return fs::is_directory(dataset, ec) ? kExitIndex : kExitUsage;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIndex;
    }
}

int run_search(const std::string& index_dir, const std::string& query_text, const std::string& format,
               std::size_t top_k, std::size_t offset, bool as_json) {
    std::optional<IndexReader> index;
    try {
        index.emplace(IndexReader::open(index_dir));
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIndex;
    }
    Query query;
    try {
        query = parse_query(query_text, format == "mathml" ? QueryFormat::mathml : QueryFormat::latex,
                            index->config());
    } catch (const PositionedError& e) {
        std::cerr << "error: invalid query: " << e.what() << " (offset " << e.position() << ")\n";
        return kExitUsage;
    }
    SearchResponse response = execute(*index, query, top_k, offset);
    if (as_json) {
        auto body = nlohmann::json::parse(search_response_json(query_text, response, 0));
        std::cout << body["results"].dump(2, ' ', false, nlohmann::json::error_handler_t::replace)
                  << '\n';
        return 0;
    }
    bool color = !std::getenv("NO_COLOR") && ::isatty(STDOUT_FILENO);
    if (response.results.empty()) {
        std::cout << "no hits\n";
        return 0;
    }
    std::size_t rank = offset;
    for (const auto& r : response.results) {
        std::cout << ++rank << ". " << std::fixed << std::setprecision(4) << r.score << "  " << r.path
                  << "  " << r.title << '\n';
        std::cout << "    " << mark_snippet(r, color) << '\n';
    }
    std::cout << response.total_hits << " hits\n";
    return 0;
}

int run_stats(const std::string& index_dir, bool as_json) {
    try {
        IndexReader index = IndexReader::open(index_dir);
        const IndexStats& s = index.stats();
        if (as_json) {
            nlohmann::json j = {{"documents", s.documents},
                                {"input_formulae", s.input_formulae},
                                {"indexed_subformulae", s.indexed_subformulae},
                                {"wall_time_seconds", s.wall_time_seconds},
                                {"cpu_time_seconds", s.cpu_time_seconds},
                                {"segments", index.segment_count()},
                                {"terms", index.terms().size()}};
            std::cout << j.dump(2) << '\n';
        } else {
            print_stats_table(s);
            std::printf("segments: %zu\n", index.segment_count());
        }
        return 0;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIndex;
    }
}

int run_debug(const std::string& stage, const PipelineConfig& config) {
    std::string input = trim(read_stdin());
    try {
        if (stage == "latex") {
            std::cout << serialize(latex_to_mathml(input)) << '\n';
        } else if (stage == "canonicalize") {
            std::cout << serialize(canonicalize(parse_mathml(input))) << '\n';
        } else {
            Formula f{canonicalize(parse_mathml(input)), FormulaKind::presentation, {}, 0};
            if (uses_content_markup(f.root)) f.kind = FormulaKind::content;
            for (const auto& t : tokenize_formula(f, config))
                std::cout << std::fixed << std::setprecision(4) << t.weight << '\t'
                          << to_string(t.variant) << '\t' << t.depth << '\t' << t.term << '\n';
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

int run_gen_corpus(std::uint64_t seed, std::size_t docs, const std::string& out, const CorpusProfile& profile) {
    try {
        CorpusManifest m = generate_corpus(seed, docs, out, profile);
        std::printf("wrote %zu documents, %zu formulae, %zu expected math tokens to %s\n",
                    m.documents.size(), m.total_formulae(), m.total_tokens(), out.c_str());
        return 0;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

int run_serve(std::string index_dir, std::string bind, std::optional<std::string> ui) {
    if (const char* env = std::getenv("MATHFIND_INDEX"); env && *env) index_dir = env;
    if (const char* env = std::getenv("MATHFIND_BIND"); env && *env) bind = env;
    if (index_dir.empty()) {
        std::cerr << "error: no index directory (--index or MATHFIND_INDEX)\n";
        return kExitIndex;
    }
    ServiceOptions options;
    options.index_dir = index_dir;
    try {
        std::tie(options.host, options.port) = parse_bind_address(bind);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIndex;
    }
    if (ui) options.ui_dir = *ui;
    options.access_log = &std::cout;

    // Termination signals are taken synchronously by the main thread below.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGTERM);
    sigaddset(&signals, SIGINT);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    SearchService service(options);
    if (!service.bind()) {
        std::cerr << "error: cannot bind " << options.host << ':' << options.port << '\n';
        return kExitIndex;
    }
    std::cout << "listening on http://" << options.host << ':' << service.port() << std::endl;
    std::thread server([&] { service.run(); });
    try {
        service.load_index();
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        service.stop();
        server.join();
        return kExitIndex;
    }
    std::cout << "index loaded from " << index_dir << std::endl;

    int sig = 0;
    sigwait(&signals, &sig);
    std::cout << "shutting down" << std::endl;
    service.stop();
    server.join();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Math-aware full-text search engine"};
    app.require_subcommand(1);

    // index
    auto* index_cmd = app.add_subcommand("index", "Index a dataset directory");
    std::string dataset, index_dir;
    IndexOptions index_options;
    index_options.threads = std::max(1u, std::thread::hardware_concurrency());
    std::optional<std::size_t> max_depth;
    bool no_leaves = false;
    index_cmd->add_option("--dataset", dataset, "Directory of XHTML/HTML documents")->required();
    index_cmd->add_option("--index", index_dir, "Index directory to create")->required();
    index_cmd->add_option("--threads", index_options.threads, "Document preparation threads")
        ->check(CLI::PositiveNumber);
    index_cmd->add_flag("--overwrite", index_options.overwrite, "Replace an existing index");
    index_cmd->add_option("--alpha", index_options.config.alpha, "Depth decay factor");
    index_cmd->add_option("--beta", index_options.config.beta, "Variable unification factor");
    index_cmd->add_option("--gamma", index_options.config.gamma, "Constant unification factor");
    index_cmd->add_option("--max-depth", max_depth, "Deepest indexed subformula level");
    index_cmd->add_flag("--no-leaves", no_leaves, "Do not index single-symbol subformulae");

    // search
    auto* search_cmd = app.add_subcommand("search", "Query an index");
    std::string search_index, query_text, query_format = "latex";
    std::size_t top_k = 10, offset = 0;
    bool search_json = false;
    search_cmd->add_option("--index", search_index, "Index directory")->required();
    search_cmd->add_option("--query-format", query_format, "Math syntax of the query")
        ->check(CLI::IsMember({"latex", "mathml"}));
    search_cmd->add_option("--top-k", top_k, "Results to show")->check(CLI::PositiveNumber);
    search_cmd->add_option("--offset", offset, "Results to skip");
    search_cmd->add_flag("--json", search_json, "Print results as JSON");
    search_cmd->add_option("query", query_text, "Text with $...$ (or <math>) formulae")->required();

    // stats
    auto* stats_cmd = app.add_subcommand("stats", "Show index statistics");
    std::string stats_index;
    bool stats_json = false;
    stats_cmd->add_option("--index", stats_index, "Index directory")->required();
    stats_cmd->add_flag("--json", stats_json, "Print as JSON");

    // debug stages
    PipelineConfig debug_config;
    auto* canon_cmd = app.add_subcommand("canonicalize", "Canonicalize MathML read from stdin");
    auto* tokenize_cmd = app.add_subcommand("tokenize", "Print the index tokens of MathML from stdin");
    auto* latex_cmd = app.add_subcommand("latex", "Convert LaTeX from stdin to MathML");
    tokenize_cmd->add_option("--alpha", debug_config.alpha);
    tokenize_cmd->add_option("--beta", debug_config.beta);
    tokenize_cmd->add_option("--gamma", debug_config.gamma);

    // gen-corpus
    auto* gen_cmd = app.add_subcommand("gen-corpus", "Write a synthetic XHTML+MathML corpus");
    std::uint64_t seed = 42;
    std::size_t docs = 100;
    std::string out_dir;
    CorpusProfile profile;
    gen_cmd->add_option("--seed", seed, "Random seed");
    gen_cmd->add_option("--docs", docs, "Number of documents");
    gen_cmd->add_option("--out", out_dir, "Output directory (absent or empty)")->required();
    gen_cmd->add_option("--formulae", profile.mean_formulae, "Mean formulae per document");
    gen_cmd->add_option("--words", profile.mean_words, "Mean words per document");
    gen_cmd->add_option("--max-depth", profile.max_depth, "Maximum formula depth")
        ->check(CLI::PositiveNumber);

    // serve
    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP search service");
    std::string serve_index, bind = "0.0.0.0:8080";
    std::optional<std::string> ui_dir;
    serve_cmd->add_option("--index", serve_index, "Index directory (env MATHFIND_INDEX)");
    serve_cmd->add_option("--bind", bind, "host:port (env MATHFIND_BIND)");
    serve_cmd->add_option("--ui", ui_dir, "Directory with the web UI bundle");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    if (*index_cmd) {
        index_options.config.max_depth = max_depth;
        index_options.config.index_leaves = !no_leaves;
        try {
            index_options.config.validate();
        } catch (const std::invalid_argument& e) {
            std::cerr << "error: " << e.what() << '\n';
            return kExitUsage;
        }
        return run_index(dataset, index_dir, index_options);
    }
    if (*search_cmd) return run_search(search_index, query_text, query_format, top_k, offset, search_json);
    if (*stats_cmd) return run_stats(stats_index, stats_json);
    if (*canon_cmd) return run_debug("canonicalize", debug_config);
    if (*tokenize_cmd) return run_debug("tokenize", debug_config);
    if (*latex_cmd) return run_debug("latex", debug_config);
    if (*gen_cmd) return run_gen_corpus(seed, docs, out_dir, profile);
    if (*serve_cmd) return run_serve(serve_index, bind, ui_dir);
    return kExitUsage;
}
