#include "akira/process.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <random>

#include "akira/error.hpp"
#include "akira/text.hpp"

namespace akira {

namespace {

using Clock = std::chrono::steady_clock;

constexpr int kExecFailedStatus = 127;

void drain(int fd, std::string& sink, bool& open) {
  std::array<char, 4096> buf;
  const ssize_t n = ::read(fd, buf.data(), buf.size());
  if (n > 0) {
    sink.append(buf.data(), static_cast<std::size_t>(n));
  } else if (n == 0 || (errno != EINTR && errno != EAGAIN)) {
    open = false;
  }
}

}  // namespace

ProcessResult run_process(const std::vector<std::string>& argv, const ProcessOptions& options) {
  if (argv.empty()) throw Error(ErrorKind::InvalidArgument, "empty command line");

  int out_pipe[2], err_pipe[2], exec_pipe[2];
  if (::pipe(out_pipe) != 0 || ::pipe(err_pipe) != 0 || ::pipe2(exec_pipe, O_CLOEXEC) != 0)
    throw Error(ErrorKind::Io, std::string("pipe: ") + std::strerror(errno));

  std::vector<char*> cargv;
  for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
  cargv.push_back(nullptr);

  const pid_t pid = ::fork();
  if (pid < 0) throw Error(ErrorKind::Io, std::string("fork: ") + std::strerror(errno));

  if (pid == 0) {
    ::setpgid(0, 0);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    ::dup2(err_pipe[1], STDERR_FILENO);
    ::close(out_pipe[0]);
    ::close(out_pipe[1]);
    ::close(err_pipe[0]);
    ::close(err_pipe[1]);
    ::close(exec_pipe[0]);
    const int devnull = ::open("/dev/null", O_RDONLY);
    if (devnull >= 0) ::dup2(devnull, STDIN_FILENO);
    if (!options.cwd.empty() && ::chdir(options.cwd.c_str()) != 0) {
      const int err = errno;
      (void)!::write(exec_pipe[1], &err, sizeof err);
      ::_exit(kExecFailedStatus);
    }
    for (const auto& [k, v] : options.env) ::setenv(k.c_str(), v.c_str(), 1);
    ::execvp(cargv[0], cargv.data());
    const int err = errno;
    (void)!::write(exec_pipe[1], &err, sizeof err);
    ::_exit(kExecFailedStatus);
  }

  ::setpgid(pid, pid);
  ::close(out_pipe[1]);
  ::close(err_pipe[1]);
  ::close(exec_pipe[1]);

  ProcessResult result;
  int exec_errno = 0;
  if (::read(exec_pipe[0], &exec_errno, sizeof exec_errno) == sizeof exec_errno) {
    result.spawn_failed = true;
    result.stderr_text = argv[0] + ": " + std::strerror(exec_errno);
  }
  ::close(exec_pipe[0]);

  const auto deadline = Clock::now() + options.timeout;
  bool out_open = true, err_open = true;
  while (out_open || err_open) {
    const auto remaining =
        std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
    if (remaining <= 0) {
      result.timed_out = true;
      ::kill(-pid, SIGKILL);
      break;
    }
    std::array<pollfd, 2> fds{pollfd{out_pipe[0], POLLIN, 0}, pollfd{err_pipe[0], POLLIN, 0}};
    const int rc = ::poll(fds.data(), fds.size(), static_cast<int>(std::min<long long>(remaining, 250)));
    if (rc < 0 && errno != EINTR) break;
    if (rc <= 0) continue;
    if (out_open && (fds[0].revents & (POLLIN | POLLHUP | POLLERR))) drain(out_pipe[0], result.stdout_text, out_open);
    if (err_open && (fds[1].revents & (POLLIN | POLLHUP | POLLERR))) drain(err_pipe[0], result.stderr_text, err_open);
  }
  ::close(out_pipe[0]);
  ::close(err_pipe[0]);

  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  // Stragglers in the group (e.g. a test binary spawned by cargo) must not outlive us.
  if (result.timed_out) ::kill(-pid, SIGKILL);
  if (!result.timed_out) {
    if (WIFEXITED(status)) {
      result.exit_code = WEXITSTATUS(status);
    } else if (WIFSIGNALED(status)) {
      result.signaled = true;
    }
  }
  return result;
}

bool command_succeeds(const std::vector<std::string>& argv, std::chrono::milliseconds timeout) {
  try {
    ProcessOptions opts;
    opts.timeout = timeout;
    return run_process(argv, opts).ok();
  } catch (const Error&) {
    return false;
  }
}

TempDir::TempDir(std::string_view prefix) {
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  const auto base = std::filesystem::temp_directory_path();
  for (int attempt = 0; attempt < 16; ++attempt) {
    auto candidate = base / (std::string(prefix) + "-" + std::to_string(::getpid()) + "-" +
                             std::to_string(rng() % 1'000'000'000));
    std::error_code ec;
    if (std::filesystem::create_directory(candidate, ec) && !ec) {
      path_ = std::move(candidate);
      return;
    }
  }
  throw Error(ErrorKind::Io, "cannot create a temporary directory under " + base.string());
}

TempDir::~TempDir() {
  if (path_.empty()) return;
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

TempDir::TempDir(TempDir&& other) noexcept : path_(std::exchange(other.path_, {})) {}

TempDir& TempDir::operator=(TempDir&& other) noexcept {
  if (this != &other) {
    std::error_code ec;
    if (!path_.empty()) std::filesystem::remove_all(path_, ec);
    path_ = std::exchange(other.path_, {});
  }
  return *this;
}

void write_cargo_project(const std::filesystem::path& dir, std::string_view code,
                         std::string_view crate_name) {
  write_file(dir / "Cargo.toml", "[package]\nname = \"" + std::string(crate_name) +
                                     "\"\nversion = \"0.1.0\"\nedition = \"2021\"\n\n"
                                     "[dependencies]\n");
  write_file(dir / "src" / "main.rs", code);
}

}  // namespace akira
