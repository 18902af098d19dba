#include "tracer/repo/repository.hpp"

#include <httplib.h>

#include <algorithm>
#include <fcntl.h>
#include <map>
#include <regex>
#include <set>
#include <sys/file.h>
#include <unistd.h>

#include "tracer/util/digest.hpp"
#include "tracer/util/url.hpp"

namespace tracer::repo {

namespace fs = std::filesystem;

Json TraceRef::to_json() const
{
    Json j = Json::object();
    j["id"] = id;
    j["version"] = version;
    j["digest"] = digest;
    j["url_pattern"] = url_pattern;
    if (!source.empty()) {
        j["source"] = source;
    }
    return j;
}

Json SyncReport::to_json() const
{
    Json j = Json::object();
    j["remote"] = remote;
    Json a = Json::array();
    for (const auto& r : added) {
        a.push_back(r.to_json());
    }
    j["added"] = std::move(a);
    Json u = Json::array();
    for (const auto& c : updated) {
        u.push_back({{"id", c.id}, {"from", c.from ? Json(*c.from) : Json(nullptr)}, {"to", c.to}});
    }
    j["updated"] = std::move(u);
    return j;
}

std::string trace_digest(const trace::Trace& t)
{
    return "sha256:" + sha256_hex(trace::serialize_trace(t));
}

namespace {

const std::regex kIdRe("[a-z0-9][a-z0-9._-]*");

class DirLock {
  public:
    explicit DirLock(const fs::path& dir)
    {
        fs::create_directories(dir);
        fd_ = ::open((dir / ".lock").c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
        if (fd_ < 0 || ::flock(fd_, LOCK_EX) != 0) {
            throw IoError("cannot lock " + dir.string());
        }
    }
    ~DirLock()
    {
        if (fd_ >= 0) {
            ::flock(fd_, LOCK_UN);
            ::close(fd_);
        }
    }
    DirLock(const DirLock&) = delete;
    DirLock& operator=(const DirLock&) = delete;

  private:
    int fd_ = -1;
};

fs::path trace_path(const fs::path& root, const std::string& id, int version)
{
    return root / "traces" / id / (std::to_string(version) + ".trace.json");
}

// Reads files of a remote repository by relative path.
class Remote {
  public:
    explicit Remote(const std::string& location) : location_(location)
    {
        if (is_absolute_http_url(location)) {
            auto url = parse_url(location);
            client_ = std::make_unique<httplib::Client>(to_lower(url.scheme) + "://" + url.authority());
            client_->set_connection_timeout(10);
            client_->set_read_timeout(30);
            client_->set_follow_location(true);
            client_->enable_server_certificate_verification(true);
            base_ = url.path;
            while (!base_.empty() && base_.back() == '/') {
                base_.pop_back();
            }
        } else {
            dir_ = location;
            if (!fs::is_directory(dir_)) {
                throw RemoteUnreachable("repository directory " + location + " does not exist");
            }
        }
    }

    // nullopt when the file does not exist.
    std::optional<std::string> get(const std::string& rel) const
    {
        if (!client_) {
            auto p = dir_ / rel;
            if (!fs::is_regular_file(p)) {
                return std::nullopt;
            }
            return read_file(p);
        }
        auto res = client_->Get(base_ + "/" + rel);
        if (!res) {
            throw RemoteUnreachable("fetching " + describe(rel) + ": " + httplib::to_string(res.error()));
        }
        if (res->status == 404) {
            return std::nullopt;
        }
        if (res->status != 200) {
            throw RemoteUnreachable("fetching " + describe(rel) + ": HTTP " + std::to_string(res->status));
        }
        return res->body;
    }

    std::string describe(const std::string& rel) const
    {
        return client_ ? location_ + "/" + rel : (dir_ / rel).string();
    }

  private:
    std::string location_;
    std::unique_ptr<httplib::Client> client_;
    std::string base_;
    fs::path dir_;
};

std::vector<TraceRef> parse_manifest(const std::string& text, const std::string& where)
{
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw LayoutError(where + ": manifest is not JSON: " + e.what());
    }
    if (!j.is_object() || !j.contains("traces") || !j["traces"].is_array()) {
        throw LayoutError(where + ": manifest needs a \"traces\" array");
    }
    std::vector<TraceRef> refs;
    std::set<std::pair<std::string, int>> seen;
    for (const auto& e : j["traces"]) {
        if (!e.is_object() || !e.contains("id") || !e["id"].is_string() || !e.contains("version") ||
            !e["version"].is_number_integer() || !e.contains("digest") || !e["digest"].is_string()) {
            throw LayoutError(where + ": manifest entry needs id, version and digest");
        }
        TraceRef r;
        r.id = e["id"].get<std::string>();
        r.version = e["version"].get<int>();
        r.digest = e["digest"].get<std::string>();
        r.url_pattern = e.value("url_pattern", std::string());
        if (!std::regex_match(r.id, kIdRe) || r.version < 1) {
            throw LayoutError(where + ": bad manifest entry " + r.id + " v" + std::to_string(r.version));
        }
        if (!seen.emplace(r.id, r.version).second) {
            throw LayoutError(where + ": duplicate manifest entry " + r.id + " v" + std::to_string(r.version));
        }
        refs.push_back(std::move(r));
    }
    return refs;
}

void write_manifest(const fs::path& root, std::vector<TraceRef> refs)
{
    std::sort(refs.begin(), refs.end(),
              [](const TraceRef& a, const TraceRef& b) { return std::tie(a.id, a.version) < std::tie(b.id, b.version); });
    Json list = Json::array();
    for (auto r : refs) {
        r.source.clear();
        list.push_back(r.to_json());
    }
    Json j = Json::object();
    j["traces"] = std::move(list);
    auto tmp = root / "manifest.json.tmp";
    write_file(tmp, to_canonical_json(j));
    fs::rename(tmp, root / "manifest.json");
}

std::vector<TraceRef> read_manifest(const fs::path& root)
{
    auto p = root / "manifest.json";
    if (!fs::exists(p)) {
        return {};
    }
    auto refs = parse_manifest(read_file(p), p.string());
    for (auto& r : refs) {
        r.source = trace_path(root, r.id, r.version).string();
    }
    return refs;
}

std::optional<int> read_latest(const fs::path& root, const std::string& id)
{
    auto p = root / "traces" / id / "latest";
    if (!fs::exists(p)) {
        return std::nullopt;
    }
    try {
        return std::stoi(read_file(p));
    } catch (const std::exception&) {
        throw LayoutError(p.string() + " does not hold a version number");
    }
}

void write_latest(const fs::path& root, const std::string& id, int version)
{
    write_file(root / "traces" / id / "latest", std::to_string(version) + "\n");
}

trace::Trace checked_trace(const std::string& bytes, const TraceRef& ref, const std::string& where)
{
    trace::Trace t;
    try {
        t = trace::parse_trace(bytes);
    } catch (const Error& e) {
        throw LayoutError(where + ": " + e.what());
    }
    if (t.id != ref.id) {
        throw LayoutError(where + ": trace id " + t.id + " does not match manifest id " + ref.id);
    }
    if (trace_digest(t) != ref.digest) {
        throw LayoutError(where + ": digest mismatch (manifest " + ref.digest + ", content " + trace_digest(t) + ")");
    }
    return t;
}

} // namespace

SyncReport sync(const std::string& remote_location, const fs::path& cache_dir)
{
    Remote remote(remote_location);
    DirLock lock(cache_dir);
    SyncReport report;
    report.remote = remote_location;

    auto manifest_text = remote.get("manifest.json");
    std::vector<TraceRef> remote_refs;
    if (manifest_text) {
        remote_refs = parse_manifest(*manifest_text, remote.describe("manifest.json"));
    } else if (is_absolute_http_url(remote_location)) {
        throw LayoutError(remote.describe("manifest.json") + " not found");
    }

    auto cached = read_manifest(cache_dir);
    std::map<std::pair<std::string, int>, TraceRef> known;
    for (const auto& r : cached) {
        known[{r.id, r.version}] = r;
    }
    std::map<std::string, std::optional<int>> latest_before;
    for (const auto& r : cached) {
        latest_before[r.id] = read_latest(cache_dir, r.id);
    }

    for (auto ref : remote_refs) {
        auto key = std::make_pair(ref.id, ref.version);
        if (auto it = known.find(key); it != known.end()) {
            if (it->second.digest != ref.digest) {
                throw LayoutError(ref.id + " v" + std::to_string(ref.version) +
                                  " changed upstream; published versions are immutable");
            }
            continue;
        }
        auto rel = "traces/" + ref.id + "/" + std::to_string(ref.version) + ".trace.json";
        auto body = remote.get(rel);
        if (!body) {
            throw LayoutError(remote.describe(rel) + " listed in the manifest but missing");
        }
        auto t = checked_trace(*body, ref, remote.describe(rel));
        ref.url_pattern = t.url_pattern.pattern;
        auto path = trace_path(cache_dir, ref.id, ref.version);
        write_file(path, trace::serialize_trace(t));
        ref.source = remote.describe(rel);
        known[key] = ref;
        report.added.push_back(ref);
    }

    std::map<std::string, int> latest_after;
    for (const auto& [key, r] : known) {
        latest_after[key.first] = std::max(latest_after[key.first], key.second);
    }
    for (const auto& [id, v] : latest_after) {
        auto before = latest_before.count(id) != 0 ? latest_before[id] : read_latest(cache_dir, id);
        if (before != v) {
            write_latest(cache_dir, id, v);
            report.updated.push_back({id, before, v});
        }
    }
    std::vector<TraceRef> all;
    for (const auto& [key, r] : known) {
        all.push_back(r);
    }
    if (!report.empty() || !fs::exists(cache_dir / "manifest.json")) {
        write_manifest(cache_dir, all);
    }
    return report;
}

std::vector<TraceRef> list_cached(const fs::path& cache_dir)
{
    return read_manifest(cache_dir);
}

std::vector<TraceRef> lookup(const std::string& url, const fs::path& cache_dir)
{
    std::map<std::string, TraceRef> latest;
    for (const auto& r : read_manifest(cache_dir)) {
        auto pointer = read_latest(cache_dir, r.id);
        auto& slot = latest[r.id];
        bool is_latest = pointer ? r.version == *pointer : r.version > slot.version;
        if (is_latest) {
            slot = r;
        }
    }
    std::vector<std::pair<std::size_t, TraceRef>> hits;
    for (auto& [id, r] : latest) {
        if (r.version == 0) {
            continue;
        }
        trace::UrlPattern p{r.url_pattern};
        if (trace::match_url(p, url)) {
            hits.emplace_back(trace::literal_prefix_length(p), r);
        }
    }
    std::sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) {
            return a.first > b.first;
        }
        if (a.second.version != b.second.version) {
            return a.second.version > b.second.version;
        }
        return a.second.id < b.second.id;
    });
    std::vector<TraceRef> out;
    for (auto& h : hits) {
        out.push_back(std::move(h.second));
    }
    return out;
}

trace::Trace load_trace(const TraceRef& ref)
{
    return checked_trace(read_file(ref.source), ref, ref.source);
}

std::optional<TraceRef> find_version(const fs::path& cache_dir, const std::string& id, int version)
{
    for (auto& r : read_manifest(cache_dir)) {
        if (r.id == id && r.version == version) {
            return r;
        }
    }
    return std::nullopt;
}

PublishResult publish_local(const fs::path& repo_dir, const trace::Trace& t)
{
    auto report = trace::validate_trace(t);
    if (report.has_errors()) {
        throw trace::SchemaError(report.findings.front().path, report.findings.front().message);
    }
    DirLock lock(repo_dir);
    auto refs = read_manifest(repo_dir);
    auto digest = trace_digest(t);
    int latest = 0;
    std::optional<TraceRef> latest_ref;
    for (const auto& r : refs) {
        if (r.id == t.id && r.version > latest) {
            latest = r.version;
            latest_ref = r;
        }
    }
    if (latest_ref && latest_ref->digest == digest) {
        return {*latest_ref, false};
    }
    TraceRef ref{t.id, latest + 1, digest, t.url_pattern.pattern, trace_path(repo_dir, t.id, latest + 1).string()};
    write_file(ref.source, trace::serialize_trace(t));
    write_latest(repo_dir, t.id, ref.version);
    refs.push_back(ref);
    write_manifest(repo_dir, refs);
    return {ref, true};
}

} // namespace tracer::repo
