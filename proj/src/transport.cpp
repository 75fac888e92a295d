#include <netdb.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <mutex>

#include "dts/error.hpp"
#include "dts/wire.hpp"

namespace dts::wire {
namespace {

class FdTransport : public Transport {
 public:
  FdTransport(int read_fd, int write_fd, bool owns, bool is_socket)
      : read_fd_(read_fd), write_fd_(write_fd), owns_(owns), socket_(is_socket) {}

  ~FdTransport() override {
    if (!owns_) return;
    if (read_fd_ >= 0) ::close(read_fd_);
    if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
  }

  void write_all(std::string_view bytes) override {
    std::size_t done = 0;
    while (done < bytes.size()) {
      const ssize_t n = socket_ ? ::send(write_fd_, bytes.data() + done, bytes.size() - done, MSG_NOSIGNAL)
                                : ::write(write_fd_, bytes.data() + done, bytes.size() - done);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw BackendError(std::string("transport write failed: ") + std::strerror(errno));
      }
      done += static_cast<std::size_t>(n);
    }
  }

  std::optional<std::string> read_line() override {
    std::string line;
    while (true) {
      if (auto pos = buffer_.find('\n', cursor_); pos != std::string::npos) {
        line.assign(buffer_, cursor_, pos - cursor_);
        cursor_ = pos + 1;
        return line;
      }
      if (!fill()) {
        if (cursor_ == buffer_.size()) return std::nullopt;
        throw BackendError("transport closed mid-line");
      }
    }
  }

  std::string read_exact(std::size_t n) override {
    while (buffer_.size() - cursor_ < n)
      if (!fill()) throw BackendError("transport closed mid-message");
    std::string out = buffer_.substr(cursor_, n);
    cursor_ += n;
    return out;
  }

 protected:
  void close_write() {
    if (write_fd_ >= 0 && write_fd_ != read_fd_) {
      ::close(write_fd_);
      write_fd_ = -1;
    }
  }

 private:
  bool fill() {
    if (cursor_ > 0) {
      buffer_.erase(0, cursor_);
      cursor_ = 0;
    }
    char chunk[1 << 16];
    while (true) {
      const ssize_t n = ::read(read_fd_, chunk, sizeof chunk);
      if (n < 0 && errno == EINTR) continue;
      if (n < 0) throw BackendError(std::string("transport read failed: ") + std::strerror(errno));
      if (n == 0) return false;
      buffer_.append(chunk, static_cast<std::size_t>(n));
      return true;
    }
  }

  int read_fd_;
  int write_fd_;
  bool owns_;
  bool socket_;
  std::string buffer_;
  std::size_t cursor_ = 0;
};

class ChildTransport final : public FdTransport {
 public:
  ChildTransport(int read_fd, int write_fd, pid_t pid) : FdTransport(read_fd, write_fd, true, false), pid_(pid) {}
  ~ChildTransport() override {
    close_write();  // service sees EOF and exits
    int status = 0;
    for (int i = 0; i < 100 && ::waitpid(pid_, &status, WNOHANG) == 0; ++i) ::usleep(2000);
    if (::waitpid(pid_, &status, WNOHANG) == 0) {
      ::kill(pid_, SIGTERM);
      ::waitpid(pid_, &status, 0);
    }
  }

 private:
  pid_t pid_;
};

std::unique_ptr<Transport> connect_tcp(const std::string& hostport) {
  const auto colon = hostport.rfind(':');
  if (colon == std::string::npos) throw BackendError("tcp endpoint needs host:port");
  const std::string host = hostport.substr(0, colon);
  const std::string port = hostport.substr(colon + 1);
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (int rc = ::getaddrinfo(host.c_str(), port.c_str(), &hints, &res); rc != 0)
    throw BackendError("cannot resolve " + hostport + ": " + ::gai_strerror(rc));
  int fd = -1;
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) throw BackendError("cannot connect to " + hostport);
  return std::make_unique<FdTransport>(fd, fd, true, true);
}

std::unique_ptr<Transport> spawn(const std::string& command) {
  int to_child[2], from_child[2];
  if (::pipe(to_child) != 0) throw BackendError("pipe failed");
  if (::pipe(from_child) != 0) {
    ::close(to_child[0]);
    ::close(to_child[1]);
    throw BackendError("pipe failed");
  }
  // A service that dies mid-request must surface as a write error, not a signal.
  ::signal(SIGPIPE, SIG_IGN);
  const pid_t pid = ::fork();
  if (pid < 0) throw BackendError("fork failed");
  if (pid == 0) {
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::close(to_child[0]);
    ::close(to_child[1]);
    ::close(from_child[0]);
    ::close(from_child[1]);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(to_child[0]);
  ::close(from_child[1]);
  return std::make_unique<ChildTransport>(from_child[0], to_child[1], pid);
}

}  // namespace

std::unique_ptr<Transport> fd_transport(int read_fd, int write_fd, bool owns) {
  return std::make_unique<FdTransport>(read_fd, write_fd, owns, false);
}

std::unique_ptr<Transport> connect(const std::string& endpoint) {
  if (endpoint.starts_with("tcp://")) return connect_tcp(endpoint.substr(6));
  if (endpoint.starts_with("exec:")) return spawn(endpoint.substr(5));
  throw BackendError("unsupported endpoint '" + endpoint + "' (expected tcp://host:port or exec:command)");
}

// ---------------------------------------------------------------------------

struct ExternalDenoiser::State {
  std::unique_ptr<Transport> io;
  Capabilities caps;
  std::mutex mu;

  Response round_trip(const std::string& bytes) {
    io->write_all(bytes);
    auto m = read_message(*io);
    if (!m) throw BackendError("service closed the connection");
    Response r;
    try {
      r = decode_response(*m);
    } catch (const FormatError& e) {
      throw BackendError(e.what());
    }
    if (r.status != "ok") throw BackendError("service error: " + r.message);
    return r;
  }
};

ExternalDenoiser::ExternalDenoiser(const std::string& endpoint) : state_(std::make_unique<State>()) {
  state_->io = connect(endpoint);
  Request req;
  req.op = "capabilities";
  Response r = state_->round_trip(encode(req));
  if (!r.capabilities) throw BackendError("service did not report capabilities");
  state_->caps = *r.capabilities;
  state_->caps.max_concurrency = 1;  // one connection serves one request at a time
}

ExternalDenoiser::~ExternalDenoiser() = default;

Capabilities ExternalDenoiser::capabilities() const { return state_->caps; }

LatentTensor ExternalDenoiser::predict_epsilon(const LatentTensor& x_t, int t, const NoiseSchedule& schedule,
                                               const ViewCondition& condition) {
  const std::string bytes = encode(make_denoise_request(x_t, t, schedule, condition));
  std::lock_guard lock(state_->mu);
  Response r = state_->round_trip(bytes);
  if (r.epsilon.dims() != x_t.dims()) throw BackendError("service echoed a different shape");
  return std::move(r.epsilon);
}

}  // namespace dts::wire
