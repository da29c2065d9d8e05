#pragma once

#include <cerrno>
#include <csignal>
#include <cstdint>
#include <cstring>
#include <mutex>
#include <string>
#include <vector>

#include <fcntl.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include "cue/backend.hpp"

namespace cue {

/// Runs a model in a child process and exchanges raw little-endian float32
/// batches over its stdin/stdout.
///
/// Request:  u32 magic 'CUEI', u32 batch, then batch * 3 * H * W floats.
/// Response: u32 magic 'CUEO', u32 batch, u32 queries, u32 classes,
///           batch * queries * classes logits, then batch * queries * 4 boxes.
///
/// The sidecar's runtime block is `{"kind": "process", "command": [argv...]}`.
/// Arguments starting with "./" resolve against the sidecar directory.
class ProcessBackend : public DetectorBackend {
public:
  static constexpr std::uint32_t kRequestMagic = 0x49455543;   // "CUEI"
  static constexpr std::uint32_t kResponseMagic = 0x4F455543;  // "CUEO"

  explicit ProcessBackend(BackendSpec spec) : spec_(std::move(spec)) {
    std::vector<std::string> argv;
    try {
      argv = spec_.runtime.at("command").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception&) {
      throw BackendError("process backend: runtime.command must be a list of strings");
    }
    if (argv.empty()) throw BackendError("process backend: empty command");
    for (auto& a : argv)
      if (a.rfind("./", 0) == 0 && !spec_.base_dir.empty()) a = (spec_.base_dir / a.substr(2)).string();
    spawn(argv);
  }

  ProcessBackend(const ProcessBackend&) = delete;
  ProcessBackend& operator=(const ProcessBackend&) = delete;

  ~ProcessBackend() override {
    if (to_child_ >= 0) ::close(to_child_);
    if (from_child_ >= 0) ::close(from_child_);
    if (pid_ > 0) {
      int status = 0;
      ::waitpid(pid_, &status, 0);
    }
  }

  const BackendSpec& spec() const override { return spec_; }

  std::vector<BackendOutput> infer(std::span<const ImageTensor> batch) override {
    std::lock_guard lock(mutex_);
    const auto n = static_cast<std::uint32_t>(batch.size());
    write_u32(kRequestMagic);
    write_u32(n);
    for (const auto& t : batch) {
      if (t.data.size() != static_cast<std::size_t>(3) * spec_.height * spec_.width)
        throw BackendError("process backend: tensor has the wrong shape");
      write_all(t.data.data(), t.data.size() * sizeof(float));
    }

    if (read_u32() != kResponseMagic) throw BackendError("process backend: bad response magic");
    if (read_u32() != n) throw BackendError("process backend: response batch size mismatch");
    const std::uint32_t queries = read_u32();
    const std::uint32_t classes = read_u32();
    if (queries != static_cast<std::uint32_t>(spec_.num_queries))
      throw BackendError("process backend: query count differs from sidecar num_queries");
    if (classes <= static_cast<std::uint32_t>(std::max(spec_.cue_class_index, spec_.no_object_index)))
      throw BackendError("process backend: too few classes");

    std::vector<float> logits(static_cast<std::size_t>(n) * queries * classes);
    std::vector<float> boxes(static_cast<std::size_t>(n) * queries * 4);
    read_all(logits.data(), logits.size() * sizeof(float));
    read_all(boxes.data(), boxes.size() * sizeof(float));

    std::vector<BackendOutput> outs(n);
    for (std::uint32_t b = 0; b < n; ++b) {
      outs[b].queries.resize(queries);
      for (std::uint32_t q = 0; q < queries; ++q) {
        auto& slot = outs[b].queries[q];
        const float* l = &logits[(static_cast<std::size_t>(b) * queries + q) * classes];
        slot.logits.assign(l, l + classes);
        const float* bx = &boxes[(static_cast<std::size_t>(b) * queries + q) * 4];
        std::copy(bx, bx + 4, slot.box.begin());
      }
    }
    return outs;
  }

private:
  void spawn(const std::vector<std::string>& argv) {
    int in_pipe[2], out_pipe[2];
    if (::pipe(in_pipe) != 0 || ::pipe(out_pipe) != 0) throw BackendError("process backend: pipe failed");
    std::signal(SIGPIPE, SIG_IGN);
    pid_ = ::fork();
    if (pid_ < 0) throw BackendError("process backend: fork failed");
    if (pid_ == 0) {
      ::dup2(in_pipe[0], STDIN_FILENO);
      ::dup2(out_pipe[1], STDOUT_FILENO);
      ::close(in_pipe[0]);
      ::close(in_pipe[1]);
      ::close(out_pipe[0]);
      ::close(out_pipe[1]);
      std::vector<char*> args;
      for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
      args.push_back(nullptr);
      ::execvp(args[0], args.data());
      ::_exit(127);
    }
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    to_child_ = in_pipe[1];
    from_child_ = out_pipe[0];
    ::fcntl(to_child_, F_SETFD, FD_CLOEXEC);
    ::fcntl(from_child_, F_SETFD, FD_CLOEXEC);
  }

  void write_all(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    while (len > 0) {
      const ssize_t w = ::write(to_child_, p, len);
      if (w < 0 && errno == EINTR) continue;
      if (w <= 0) throw BackendError("process backend: child closed its input");
      p += w;
      len -= static_cast<std::size_t>(w);
    }
  }

  void read_all(void* data, std::size_t len) {
    auto* p = static_cast<unsigned char*>(data);
    while (len > 0) {
      const ssize_t r = ::read(from_child_, p, len);
      if (r < 0 && errno == EINTR) continue;
      if (r <= 0) throw BackendError("process backend: child exited or closed its output");
      p += r;
      len -= static_cast<std::size_t>(r);
    }
  }

  // Host byte order; the engine targets little-endian hosts.
  void write_u32(std::uint32_t v) { write_all(&v, 4); }
  std::uint32_t read_u32() {
    std::uint32_t v = 0;
    read_all(&v, 4);
    return v;
  }

  BackendSpec spec_;
  pid_t pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::mutex mutex_;
};

}  // namespace cue
