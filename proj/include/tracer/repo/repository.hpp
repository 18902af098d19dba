#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tracer/trace/trace.hpp"

namespace tracer::repo {

class RemoteUnreachable : public Error {
  public:
    using Error::Error;
};

class LayoutError : public Error {
  public:
    using Error::Error;
};

struct TraceRef {
    std::string id;
    int version = 0;
    // "sha256:" + hex over the canonical serialization.
    std::string digest;
    std::string url_pattern;
    // Remote URL or local path the trace was read from.
    std::string source;

    Json to_json() const;
    bool operator==(const TraceRef&) const = default;
};

struct LatestChange {
    std::string id;
    std::optional<int> from;
    int to = 0;
};

struct SyncReport {
    std::string remote;
    std::vector<TraceRef> added;
    std::vector<LatestChange> updated;

    bool empty() const { return added.empty() && updated.empty(); }
    Json to_json() const;
};

std::string trace_digest(const trace::Trace& t);

// Mirrors a remote repository (http(s) URL or directory) into cache_dir.
// Never deletes cached versions. Throws RemoteUnreachable or LayoutError.
SyncReport sync(const std::string& remote, const std::filesystem::path& cache_dir);

// Latest versions whose pattern matches url, most specific first, then newest.
std::vector<TraceRef> lookup(const std::string& url, const std::filesystem::path& cache_dir);

// Every cached (id, version).
std::vector<TraceRef> list_cached(const std::filesystem::path& cache_dir);

trace::Trace load_trace(const TraceRef& ref);
std::optional<TraceRef> find_version(const std::filesystem::path& cache_dir, const std::string& id, int version);

struct PublishResult {
    TraceRef ref;
    // False when the content equals the current latest version.
    bool created = false;
};

// Adds a validated trace to a local repository as the next version of its id.
PublishResult publish_local(const std::filesystem::path& repo_dir, const trace::Trace& t);

} // namespace tracer::repo
