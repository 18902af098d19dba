#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace tracer::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// Runs one subcommand. args excludes the program name.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int dispatch(int argc, char** argv);

// Receives traces over HTTP and publishes them into a local repository
// layout. PUT /traces/<id> answers 201 or 422 with findings; GET /health.
class IngestServer {
  public:
    static std::unique_ptr<IngestServer> start(std::filesystem::path repo_dir, const std::string& host = "127.0.0.1",
                                               int port = 0);
    ~IngestServer();
    IngestServer(const IngestServer&) = delete;
    IngestServer& operator=(const IngestServer&) = delete;

    int port() const;
    void stop();

    struct Impl;

  private:
    explicit IngestServer(std::unique_ptr<Impl> impl);
    std::unique_ptr<Impl> impl_;
};

} // namespace tracer::cli
