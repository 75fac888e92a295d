#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dts/conditions.hpp"
#include "dts/denoiser.hpp"
#include "dts/schedule.hpp"
#include "dts/tensor.hpp"

// Denoiser wire protocol. Each message is one UTF-8 JSON header line followed
// by `binary_bytes` raw bytes. Request binary order: keypoint map (f32),
// segment masks (u8, segment order), x_t payload (f32); little-endian.
namespace dts::wire {

struct Segment {
  std::string caption;
  Mask mask;
  friend bool operator==(const Segment&, const Segment&) = default;
};

struct Request {
  std::string op = "denoise";  // "capabilities" | "denoise"
  int t = 0;
  int T = 0;
  double alpha_bar = 1.0;
  std::string global_caption;
  std::vector<Segment> segments;
  std::optional<LatentTensor> keypoint_map;
  LatentTensor payload;
  friend bool operator==(const Request&, const Request&) = default;
};

struct Response {
  std::string status = "ok";  // "ok" | "error"
  std::string message;
  LatentTensor epsilon;
  std::optional<Capabilities> capabilities;
};

struct Message {
  std::string header;  // without the trailing newline
  std::string binary;
};

std::string encode(const Request& r);
std::string encode(const Response& r);

/// Byte count announced by a header line. Throws FormatError on bad JSON.
std::size_t binary_length(std::string_view header);

Request decode_request(const Message& m);
Response decode_response(const Message& m);

Request make_denoise_request(const LatentTensor& x_t, int t, const NoiseSchedule& schedule,
                             const ViewCondition& condition);

/// Byte stream with line and exact-length reads.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual void write_all(std::string_view bytes) = 0;
  /// Reads through the next '\n' (excluded). Returns nullopt on clean EOF.
  virtual std::optional<std::string> read_line() = 0;
  virtual std::string read_exact(std::size_t n) = 0;
};

/// Transport over a pair of file descriptors (owned when `owns` is set).
std::unique_ptr<Transport> fd_transport(int read_fd, int write_fd, bool owns);

/// "tcp://host:port" or "exec:<shell command>" (service on stdin/stdout).
std::unique_ptr<Transport> connect(const std::string& endpoint);

/// Reads one message; nullopt on clean EOF.
std::optional<Message> read_message(Transport& io);

using Handler = std::function<Response(const Request&)>;

/// Service loop for one connection: answers requests until EOF. Malformed
/// requests get an error response and the connection stays open.
void serve_connection(Transport& io, const Handler& handler);

/// Reference handler computing the tanh mock rule.
Response mock_handler(const Request& request);

/// Denoiser backed by a service speaking this protocol.
class ExternalDenoiser final : public Denoiser {
 public:
  explicit ExternalDenoiser(const std::string& endpoint);
  ~ExternalDenoiser() override;

  Capabilities capabilities() const override;
  LatentTensor predict_epsilon(const LatentTensor& x_t, int t, const NoiseSchedule& schedule,
                               const ViewCondition& condition) override;

 private:
  struct State;
  std::unique_ptr<State> state_;
};

}  // namespace dts::wire
