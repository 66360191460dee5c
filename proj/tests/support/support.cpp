#include "support.hpp"

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <csignal>
#include <thread>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "mathfind/canonicalize.hpp"
#include "mathfind/corpus_gen.hpp"
#include "mathfind/document.hpp"

namespace fs = std::filesystem;

namespace mathfind {

void PrintTo(const MathNode& node, std::ostream* os) {
    *os << "(" << node.name;
    for (const auto& [k, v] : node.attributes) *os << " @" << k << "=" << v;
    if (node.text) *os << " '" << *node.text << "'";
    for (const auto& c : node.children) {
        *os << " ";
        PrintTo(c, os);
    }
    *os << ")";
}

}  // namespace mathfind

namespace mathfind::testkit {

namespace {

std::size_t pick(std::mt19937_64& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

bool chance(std::mt19937_64& rng, std::size_t one_in) { return pick(rng, one_in) == 0; }

constexpr std::array<const char*, 6> kNames = {"a", "b", "c", "x", "y", "α"};
constexpr std::array<const char*, 5> kNumbers = {"1", "2", "3", "10", "2.5"};

MathNode raw_leaf(std::mt19937_64& rng) {
    MathNode leaf = chance(rng, 3) ? MathNode("mn", kNumbers[pick(rng, kNumbers.size())])
                                   : MathNode("mi", kNames[pick(rng, kNames.size())]);
    if (chance(rng, 8)) leaf.set_attribute("class", "v");
    if (leaf.name == "mi" && chance(rng, 10)) leaf.set_attribute("mathvariant", "bold");
    if (chance(rng, 8)) leaf = MathNode("mrow", std::vector<MathNode>{std::move(leaf)});
    return leaf;
}

MathNode raw(std::mt19937_64& rng, std::size_t depth, std::size_t max_depth) {
    if (depth >= max_depth || (depth > 0 && chance(rng, 3))) return raw_leaf(rng);
    auto sub = [&] { return raw(rng, depth + 1, max_depth); };
    switch (pick(rng, 9)) {
        case 0:
        case 1:
        case 2: {
            // Operator row; mostly one commutative operator, sometimes mixed.
            static constexpr std::array<const char*, 9> ops = {"+", "*", "×", "=", "-", "−", "⁢", "⋅", "+"};
            bool uniform = !chance(rng, 3);
            std::string op = ops[pick(rng, ops.size())];
            std::size_t n = 2 + pick(rng, 3);
            MathNode row("mrow");
            for (std::size_t i = 0; i < n; ++i) {
                if (i) {
                    if (chance(rng, 12))  // implicit product
                        ;
                    else
                        row.children.emplace_back("mo", uniform ? op : ops[pick(rng, ops.size())]);
                }
                row.children.push_back(sub());
            }
            return row;
        }
        case 3:
            return MathNode("mfrac", std::vector<MathNode>{sub(), sub()});
        case 4:
            return MathNode(chance(rng, 2) ? "msup" : "msub", std::vector<MathNode>{sub(), sub()});
        case 5:
            return MathNode("msubsup", std::vector<MathNode>{sub(), sub(), sub()});
        case 6: {
            MathNode f("mfenced");
            std::size_t n = 1 + pick(rng, 3);
            for (std::size_t i = 0; i < n; ++i) f.children.push_back(sub());
            if (chance(rng, 3)) f.set_attribute("open", "[");
            if (chance(rng, 3)) f.set_attribute("close", "]");
            if (chance(rng, 4)) f.set_attribute("separators", ";");
            return f;
        }
        case 7: {
            MathNode r("msqrt");
            r.children.push_back(sub());
            if (chance(rng, 2)) {
                r.children.emplace_back("mo", "+");
                r.children.push_back(sub());
            }
            return r;
        }
        default: {
            MathNode s("mstyle", std::vector<MathNode>{sub()});
            if (chance(rng, 2)) s.set_attribute("displaystyle", "true");
            return s;
        }
    }
}

bool is_commutative_row(const MathNode& n) {
    if (n.name != "mrow" || n.children.size() < 3 || n.children.size() % 2 == 0) return false;
    const std::string* op = nullptr;
    for (std::size_t i = 0; i < n.children.size(); ++i) {
        const MathNode& c = n.children[i];
        if ((i % 2 == 1) != (c.name == "mo")) return false;
        if (i % 2 == 0) continue;
        if (!c.text || (*c.text != "+" && *c.text != "×" && *c.text != "=")) return false;
        if (op && *op != *c.text) return false;
        op = &*c.text;
    }
    return true;
}

void collect_names(const MathNode& n, std::vector<std::string>& out) {
    if (n.name == "mi" && n.text) {
        if (std::find(out.begin(), out.end(), *n.text) == out.end()) out.push_back(*n.text);
        return;
    }
    for (const auto& c : n.children) collect_names(c, out);
}

struct LeafKinds {
    bool var = false;
    bool num = false;
};

LeafKinds leaf_kinds(const MathNode& n) {
    LeafKinds k;
    if (n.children.empty()) {
        k.var = (n.name == "mi" || n.name == "ci") && n.text.has_value();
        k.num = (n.name == "mn" || n.name == "cn") && n.text.has_value();
        return k;
    }
    for (const auto& c : n.children) {
        auto sub = leaf_kinds(c);
        k.var |= sub.var;
        k.num |= sub.num;
    }
    return k;
}

std::size_t count_nodes(const MathNode& n, std::size_t depth, bool leaves,
                        std::optional<std::size_t> max_depth) {
    if (max_depth && depth > *max_depth) return 0;
    std::size_t own = (depth == 0 || !n.children.empty() || leaves) ? 1 : 0;
    for (const auto& c : n.children)
        if (c.name != "mo") own += count_nodes(c, depth + 1, leaves, max_depth);
    return own;
}

std::size_t count_tokens(const MathNode& n) {
    LeafKinds k = leaf_kinds(n);
    std::size_t total = 1 + k.var + k.num + (k.var && k.num);
    for (const auto& c : n.children)
        if (c.name != "mo") total += count_tokens(c);
    return total;
}

std::atomic<unsigned> temp_counter{0};

}  // namespace

TempDir::TempDir(const std::string& tag) {
    // tmpfs keeps the many fsyncs of the index tests cheap
    fs::path base = std::getenv("TMPDIR") || !fs::is_directory("/dev/shm") ? fs::temp_directory_path()
                                                                         : fs::path("/dev/shm");
    for (;;) {
        path_ = base / ("mathfind-" + tag + "-" + std::to_string(::getpid()) + "-" +
                        std::to_string(temp_counter++));
        std::error_code ec;
        if (fs::create_directory(path_, ec)) break;
    }
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

void write_file(const fs::path& p, const std::string& data) {
    fs::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary);
    f << data;
}

std::string read_file(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

MathNode random_raw_tree(std::mt19937_64& rng, std::size_t max_depth) {
    MathNode math("math", std::vector<MathNode>{raw(rng, 0, max_depth)});
    if (chance(rng, 3)) math.set_attribute("display", "block");
    return math;
}

MathNode random_canonical_tree(std::mt19937_64& rng, std::size_t max_depth) {
    return canonicalize(random_raw_tree(rng, max_depth));
}

MathNode permute_commutative(const MathNode& root, std::mt19937_64& rng) {
    MathNode out = root;
    for (auto& c : out.children) c = permute_commutative(c, rng);
    if (is_commutative_row(out)) {
        std::vector<MathNode> operands;
        for (std::size_t i = 0; i < out.children.size(); i += 2) operands.push_back(out.children[i]);
        std::shuffle(operands.begin(), operands.end(), rng);
        for (std::size_t i = 0; i < operands.size(); ++i) out.children[2 * i] = std::move(operands[i]);
    }
    return out;
}

MathNode rename_identifiers(const MathNode& root, const std::map<std::string, std::string>& names) {
    MathNode out = root;
    if (out.name == "mi" && out.text) {
        auto it = names.find(*out.text);
        if (it != names.end()) out.text = it->second;
        return out;
    }
    for (auto& c : out.children) c = rename_identifiers(c, names);
    return out;
}

std::vector<std::string> identifier_names(const MathNode& root) {
    std::vector<std::string> out;
    collect_names(root, out);
    return out;
}

std::size_t brute_force_subformula_count(const MathNode& root, bool leaves,
                                         std::optional<std::size_t> max_depth) {
    return count_nodes(root, 0, leaves, max_depth);
}

std::size_t brute_force_token_count(const MathNode& root) { return count_tokens(root); }

std::vector<std::string> token_multiset(const std::vector<MathToken>& tokens, bool unified_only) {
    std::vector<std::string> out;
    for (const auto& t : tokens) {
        if (unified_only && t.variant != TokenVariant::var_unified &&
            t.variant != TokenVariant::both_unified)
            continue;
        std::ostringstream s;
        s.precision(17);
        s << t.term << '|' << to_string(t.variant) << '|' << t.weight;
        out.push_back(s.str());
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::string make_document(const std::string& title, const std::vector<std::string>& parts) {
    std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
                      "<html xmlns=\"http://www.w3.org/1999/xhtml\">\n<head><title>" +
                      title + "</title></head>\n<body>\n<p>";
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += ' ';
        out += parts[i];
    }
    out += "</p>\n</body>\n</html>\n";
    return out;
}

std::vector<std::pair<DocId, double>> reference_ranking(const std::vector<DocumentInput>& docs,
                                                        const Query& query) {
    // Per-document weighted term frequencies, built straight from the tokens.
    std::vector<std::map<std::string, float>> tf(docs.size());
    for (std::size_t d = 0; d < docs.size(); ++d) {
        std::map<std::string, double> sums;
        for (const auto& t : docs[d].text_tokens) sums[std::string("t") + t.term] += 1.0;
        for (const auto& t : docs[d].math_tokens) sums[std::string("m") + t.term] += t.weight;
        for (const auto& [k, v] : sums) tf[d][k] = static_cast<float>(v);
    }
    std::map<std::string, double> qw;
    for (const auto& t : query.text_terms) qw["t" + t.term] += t.weight;
    for (const auto& t : query.math_terms) qw["m" + t.term] += t.weight;

    const double n = static_cast<double>(docs.size());
    std::vector<std::pair<DocId, double>> out;
    for (std::size_t d = 0; d < docs.size(); ++d) {
        double sum = 0;
        bool any = false;
        for (const auto& [term, w] : qw) {
            std::size_t df = 0;
            for (const auto& other : tf) df += other.count(term);
            if (df == 0) continue;
            auto it = tf[d].find(term);
            if (it == tf[d].end()) continue;
            double idf = 1.0 + std::log((n + 1.0) / (static_cast<double>(df) + 1.0));
            sum += w * std::sqrt(static_cast<double>(it->second)) * (idf * idf);
            any = true;
        }
        if (!any) continue;
        double len = static_cast<double>(docs[d].text_tokens.size() + docs[d].math_tokens.size());
        out.emplace_back(static_cast<DocId>(d), sum / std::sqrt(len + 1.0));
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    return out;
}

std::vector<DocumentInput> sample_inputs(std::uint64_t seed, std::size_t count, const PipelineConfig& config) {
    CorpusProfile profile;
    profile.mean_words = 30;
    std::vector<DocumentInput> out;
    for (auto& f : generate_documents(seed, count, profile))
        out.push_back(prepare_document(f.meta.path, std::move(f.body), config));
    return out;
}

namespace {

struct FaultInjected {};

void commit_in_batches(IndexWriter& w, const std::vector<DocumentInput>& docs, std::size_t from,
                       std::size_t per_commit) {
    for (std::size_t i = from; i < docs.size(); ++i) {
        w.add_document(docs[i]);
        if ((i + 1 - from) % per_commit == 0 || i + 1 == docs.size()) w.commit();
    }
}

std::string check_contents(const fs::path& dir, const std::vector<DocumentInput>& docs,
                           std::size_t expected) {
    IndexReader r = IndexReader::open(dir);
    if (r.document_count() != expected)
        return "reopened with " + std::to_string(r.document_count()) + " documents, expected " +
               std::to_string(expected);
    if (r.stats().documents != expected) return "stats disagree with document count";
    for (std::size_t i = 0; i < expected; ++i) {
        DocumentRecord rec = r.doc(static_cast<DocId>(i));
        if (rec.path != docs[i].path || rec.stored_body != docs[i].body)
            return "document " + std::to_string(i) + " differs after reopen";
        for (const auto& t : docs[i].math_tokens) {
            if (!r.posting(field_term(Field::math, t.term), static_cast<DocId>(i)))
                return "posting lost for document " + std::to_string(i);
            break;
        }
    }
    if (r.segment_count() > kMaxSegments + 1) return "too many segments";
    return {};
}

}  // namespace

std::vector<std::string> commit_fault_points(const fs::path& dir, const std::vector<DocumentInput>& docs,
                                             std::size_t per_commit) {
    std::vector<std::string> points;
    IndexWriter w = IndexWriter::create(dir);
    w.set_fault_hook([&](std::string_view p) { points.emplace_back(p); });
    commit_in_batches(w, docs, 0, per_commit);
    return points;
}

std::string crash_trial(const fs::path& dir, const std::vector<DocumentInput>& docs, std::size_t per_commit,
                        std::size_t crash_at) {
    std::size_t published = 0;
    std::string crashed_at;
    try {
        IndexWriter w = IndexWriter::create(dir);
        std::size_t seen = 0;
        std::size_t pending = 0;
        w.set_fault_hook([&](std::string_view p) {
            // the rename has already happened when this point fires
            if (p == "commit.manifest.renamed") published += pending;
            if (seen++ == crash_at) {
                crashed_at = p;
                throw FaultInjected{};
            }
        });
        for (std::size_t i = 0; i < docs.size(); ++i) {
            w.add_document(docs[i]);
            if ((i + 1) % per_commit == 0 || i + 1 == docs.size()) {
                pending = w.pending_documents();
                w.commit();
            }
        }
    } catch (const FaultInjected&) {
    } catch (const std::exception& e) {
        return std::string("writer failed: ") + e.what();
    }
    if (crashed_at.empty()) return "fault point " + std::to_string(crash_at) + " never reached";
    try {
        if (auto err = check_contents(dir, docs, published); !err.empty()) return crashed_at + ": " + err;
        IndexWriter w = IndexWriter::open(dir);
        if (w.segment_count() > kMaxSegments) return crashed_at + ": interrupted merge not finished";
        commit_in_batches(w, docs, published, per_commit);
        if (auto err = check_contents(dir, docs, docs.size()); !err.empty())
            return crashed_at + ": after resume, " + err;
        if (IndexReader::open(dir).segment_count() > kMaxSegments) return crashed_at + ": too many segments";
    } catch (const std::exception& e) {
        return crashed_at + ": " + e.what();
    }
    return {};
}

fs::path mathfind_binary() {
#ifdef MATHFIND_BINARY
    return MATHFIND_BINARY;
#else
    return "mathfind";
#endif
}

ProcessResult run_cli(const std::vector<std::string>& args, const std::string& stdin_data,
                      const std::vector<std::string>& env) {
    int in_pipe[2], out_pipe[2], err_pipe[2];
    if (::pipe(in_pipe) || ::pipe(out_pipe) || ::pipe(err_pipe)) return {};
    pid_t pid = ::fork();
    if (pid == 0) {
        ::dup2(in_pipe[0], 0);
        ::dup2(out_pipe[1], 1);
        ::dup2(err_pipe[1], 2);
        for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1], err_pipe[0], err_pipe[1]})
            ::close(fd);
        for (const auto& kv : env) ::putenv(const_cast<char*>(kv.c_str()));
        std::string bin = mathfind_binary().string();
        std::vector<char*> argv{bin.data()};
        std::vector<std::string> copy = args;
        for (auto& a : copy) argv.push_back(a.data());
        argv.push_back(nullptr);
        ::execv(bin.c_str(), argv.data());
        ::_exit(127);
    }
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    ::close(err_pipe[1]);
    std::size_t written = 0;
    ::fcntl(in_pipe[1], F_SETFL, O_NONBLOCK);
    ProcessResult result;
    bool in_open = true;
    if (stdin_data.empty()) {
        ::close(in_pipe[1]);
        in_open = false;
    }
    bool out_open = true, err_open = true;
    char buf[65536];
    while (out_open || err_open) {
        std::vector<pollfd> fds;
        if (out_open) fds.push_back({out_pipe[0], POLLIN, 0});
        if (err_open) fds.push_back({err_pipe[0], POLLIN, 0});
        if (in_open) fds.push_back({in_pipe[1], POLLOUT, 0});
        ::poll(fds.data(), fds.size(), -1);
        for (const auto& p : fds) {
            if (!p.revents) continue;
            if (p.fd == in_pipe[1]) {
                ssize_t n = ::write(in_pipe[1], stdin_data.data() + written, stdin_data.size() - written);
                if (n > 0) written += static_cast<std::size_t>(n);
                if (n < 0 || written == stdin_data.size()) {
                    ::close(in_pipe[1]);
                    in_open = false;
                }
                continue;
            }
            ssize_t n = ::read(p.fd, buf, sizeof buf);
            bool is_out = p.fd == out_pipe[0];
            if (n <= 0) {
                ::close(p.fd);
                (is_out ? out_open : err_open) = false;
            } else {
                (is_out ? result.out : result.err).append(buf, static_cast<std::size_t>(n));
            }
        }
    }
    if (in_open) ::close(in_pipe[1]);
    int status = 0;
    ::waitpid(pid, &status, 0);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
    return result;
}

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

BackgroundProcess::BackgroundProcess(const std::vector<std::string>& args, const std::vector<std::string>& env)
    : logs_("proc") {
    std::string out = (logs_ / "out").string(), err = (logs_ / "err").string();
    pid_ = ::fork();
    if (pid_ == 0) {
        int o = ::open(out.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
        int e = ::open(err.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
        int n = ::open("/dev/null", O_RDONLY);
        ::dup2(n, 0);
        ::dup2(o, 1);
        ::dup2(e, 2);
        for (const auto& kv : env) ::putenv(const_cast<char*>(kv.c_str()));
        std::string bin = mathfind_binary().string();
        std::vector<char*> argv{bin.data()};
        std::vector<std::string> copy = args;
        for (auto& a : copy) argv.push_back(a.data());
        argv.push_back(nullptr);
        ::execv(bin.c_str(), argv.data());
        ::_exit(127);
    }
}

BackgroundProcess::~BackgroundProcess() {
    if (pid_ > 0 && !status_) {
        ::kill(pid_, SIGKILL);
        wait(5);
    }
}

bool BackgroundProcess::wait_for_output(const std::string& needle, double timeout_seconds) {
    auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_seconds);
    while (std::chrono::steady_clock::now() < deadline) {
        if (out().find(needle) != std::string::npos) return true;
        if (wait(0)) return out().find(needle) != std::string::npos;
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    return false;
}

int BackgroundProcess::listening_port(double timeout_seconds) {
    const std::string marker = "listening on http://";
    if (!wait_for_output(marker, timeout_seconds)) return -1;
    std::string o = out();
    auto line_end = o.find('\n', o.find(marker));
    if (line_end == std::string::npos) return -1;
    auto colon = o.rfind(':', line_end);
    return std::atoi(o.substr(colon + 1, line_end - colon - 1).c_str());
}

void BackgroundProcess::signal(int sig) {
    if (pid_ > 0 && !status_) ::kill(pid_, sig);
}

std::optional<int> BackgroundProcess::wait(double timeout_seconds) {
    if (status_) return status_;
    auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_seconds);
    do {
        int status = 0;
        if (::waitpid(pid_, &status, WNOHANG) == pid_) {
            status_ = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
            return status_;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(2));
    } while (std::chrono::steady_clock::now() < deadline);
    return std::nullopt;
}

std::string BackgroundProcess::out() const { return slurp(logs_.path() / "out"); }

std::string BackgroundProcess::err() const { return slurp(logs_.path() / "err"); }

}  // namespace mathfind::testkit
