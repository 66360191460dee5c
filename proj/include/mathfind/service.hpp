#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>

#include "mathfind/search.hpp"

namespace mathfind {

struct ServiceOptions {
    std::filesystem::path index_dir;
    std::string host = "127.0.0.1";
    int port = 8080;  // 0 picks a free port
    /// Directory served at `/`; a built-in page is served when unset.
    std::optional<std::filesystem::path> ui_dir;
    /// Access log sink, one line per request. Null disables logging.
    std::ostream* access_log = nullptr;
};

/// Splits "host:port" (or ":port"). Throws std::invalid_argument.
std::pair<std::string, int> parse_bind_address(const std::string& bind);

/// HTTP front end over one index. Requests made before the index is loaded
/// get 503.
class SearchService {
public:
    explicit SearchService(ServiceOptions options);
    ~SearchService();
    SearchService(const SearchService&) = delete;
    SearchService& operator=(const SearchService&) = delete;

    /// Opens the index synchronously. Throws IndexCorrupt, IoFailure.
    void load_index();
    /// Opens the index on a background thread; failures are logged and the
    /// service keeps answering 503.
    void load_index_async();
    bool ready() const;

    /// Binds the listening socket. Returns false if the address is unusable.
    bool bind();
    /// The bound port (after bind()).
    int port() const;
    /// Serves until stop(). Requires bind().
    void run();
    /// Stops accepting requests; in-flight requests complete first.
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// JSON body of /api/search for a response.
std::string search_response_json(const std::string& query, const SearchResponse& response,
                                 double took_ms);

/// Page served at `/` when no UI directory is configured.
std::string_view builtin_ui_page();

}  // namespace mathfind
