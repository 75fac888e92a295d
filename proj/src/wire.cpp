#include "dts/wire.hpp"

#include <cstring>

#include <nlohmann/json.hpp>

#include "dts/error.hpp"

namespace dts::wire {
namespace {

using Json = nlohmann::json;

Json dims_json(const Dims& d) { return Json::array({d.height, d.width, d.channels}); }

Dims parse_dims(const Json& j) {
  if (!j.is_array() || j.size() != 3) throw FormatError("shape must be [H, W, D]");
  return {j[0].get<std::size_t>(), j[1].get<std::size_t>(), j[2].get<std::size_t>()};
}

void append_floats(std::string& out, std::span<const float> v) {
  out.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(float));
}

Json ref(std::size_t offset, std::size_t bytes) { return {{"offset", offset}, {"bytes", bytes}}; }

std::string_view slice(const std::string& binary, const Json& r, std::size_t expected) {
  const auto offset = r.at("offset").get<std::size_t>();
  const auto bytes = r.at("bytes").get<std::size_t>();
  if (bytes != expected) throw FormatError("binary section length does not match its shape");
  if (offset > binary.size() || bytes > binary.size() - offset) throw FormatError("binary reference out of range");
  return std::string_view(binary).substr(offset, bytes);
}

LatentTensor tensor_from(std::string_view bytes, Dims d) {
  std::vector<float> v(d.size());
  if (bytes.size() != v.size() * sizeof(float)) throw FormatError("payload length does not match shape");
  std::memcpy(v.data(), bytes.data(), bytes.size());
  return LatentTensor(d, std::move(v));
}

Json capabilities_json(const Capabilities& c) {
  return {{"name", c.name},
          {"accepts_conditions", c.accepts_conditions},
          {"deterministic", c.deterministic},
          {"max_concurrency", c.max_concurrency},
          {"condition_kinds", c.condition_kinds}};
}

Capabilities parse_capabilities(const Json& j) {
  Capabilities c;
  c.name = j.value("name", std::string("external"));
  c.accepts_conditions = j.value("accepts_conditions", false);
  c.deterministic = j.value("deterministic", true);
  c.max_concurrency = j.value("max_concurrency", std::size_t{1});
  c.condition_kinds = j.value("condition_kinds", std::vector<std::string>{});
  return c;
}

Json parse_header(std::string_view header) {
  try {
    Json j = Json::parse(header);
    if (!j.is_object()) throw FormatError("header must be a JSON object");
    return j;
  } catch (const Json::exception& e) {
    throw FormatError(std::string("malformed header: ") + e.what());
  }
}

}  // namespace

std::string encode(const Request& r) {
  Json h;
  h["op"] = r.op;
  std::string binary;
  if (r.op == "denoise") {
    h["t"] = r.t;
    h["T"] = r.T;
    h["alpha_bar"] = r.alpha_bar;
    h["shape"] = dims_json(r.payload.dims());
    h["global_caption"] = r.global_caption;
    if (r.keypoint_map) {
      h["keypoint_map_ref"] = ref(binary.size(), r.keypoint_map->size() * sizeof(float));
      h["keypoint_map_ref"]["shape"] = dims_json(r.keypoint_map->dims());
      append_floats(binary, r.keypoint_map->values());
    } else {
      h["keypoint_map_ref"] = nullptr;
    }
    h["segments"] = Json::array();
    for (const auto& s : r.segments) {
      Json ms = ref(binary.size(), s.mask.bits.size());
      ms["shape"] = Json::array({s.mask.extent.height, s.mask.extent.width});
      h["segments"].push_back({{"caption", s.caption}, {"mask_ref", ms}});
      binary.append(reinterpret_cast<const char*>(s.mask.bits.data()), s.mask.bits.size());
    }
    h["payload_ref"] = ref(binary.size(), r.payload.size() * sizeof(float));
    append_floats(binary, r.payload.values());
  }
  h["binary_bytes"] = binary.size();
  return h.dump() + "\n" + binary;
}

std::string encode(const Response& r) {
  Json h;
  h["status"] = r.status;
  std::string binary;
  if (r.status != "ok") {
    h["message"] = r.message;
  } else if (r.capabilities) {
    h["capabilities"] = capabilities_json(*r.capabilities);
  } else {
    h["shape"] = dims_json(r.epsilon.dims());
    append_floats(binary, r.epsilon.values());
  }
  h["binary_bytes"] = binary.size();
  return h.dump() + "\n" + binary;
}

std::size_t binary_length(std::string_view header) {
  const Json h = parse_header(header);
  auto it = h.find("binary_bytes");
  if (it == h.end() || !it->is_number_unsigned()) throw FormatError("header lacks binary_bytes");
  return it->get<std::size_t>();
}

Request decode_request(const Message& m) {
  const Json h = parse_header(m.header);
  try {
    Request r;
    r.op = h.at("op").get<std::string>();
    if (r.op == "capabilities") return r;
    if (r.op != "denoise") throw FormatError("unknown op '" + r.op + "'");
    r.t = h.at("t").get<int>();
    r.T = h.at("T").get<int>();
    r.alpha_bar = h.at("alpha_bar").get<double>();
    r.global_caption = h.value("global_caption", std::string{});
    const Dims shape = parse_dims(h.at("shape"));
    if (const auto& k = h.at("keypoint_map_ref"); !k.is_null()) {
      const Dims kd = parse_dims(k.at("shape"));
      r.keypoint_map = tensor_from(slice(m.binary, k, kd.size() * sizeof(float)), kd);
    }
    for (const auto& s : h.at("segments")) {
      const auto& mr = s.at("mask_ref");
      const auto& sh = mr.at("shape");
      Segment seg{s.at("caption").get<std::string>(), Mask({sh.at(0).get<std::size_t>(), sh.at(1).get<std::size_t>()})};
      const auto bytes = slice(m.binary, mr, seg.mask.bits.size());
      std::memcpy(seg.mask.bits.data(), bytes.data(), bytes.size());
      r.segments.push_back(std::move(seg));
    }
    r.payload = tensor_from(slice(m.binary, h.at("payload_ref"), shape.size() * sizeof(float)), shape);
    return r;
  } catch (const Json::exception& e) {
    throw FormatError(std::string("malformed request: ") + e.what());
  }
}

Response decode_response(const Message& m) {
  const Json h = parse_header(m.header);
  try {
    Response r;
    r.status = h.at("status").get<std::string>();
    if (r.status != "ok") {
      r.message = h.value("message", std::string("unspecified error"));
      return r;
    }
    if (auto c = h.find("capabilities"); c != h.end()) {
      r.capabilities = parse_capabilities(*c);
      return r;
    }
    r.epsilon = tensor_from(m.binary, parse_dims(h.at("shape")));
    return r;
  } catch (const Json::exception& e) {
    throw FormatError(std::string("malformed response: ") + e.what());
  }
}

Request make_denoise_request(const LatentTensor& x_t, int t, const NoiseSchedule& schedule,
                             const ViewCondition& condition) {
  Request r;
  r.op = "denoise";
  r.t = t;
  r.T = schedule.steps();
  r.alpha_bar = schedule.alpha_bar(t);
  r.global_caption = condition.full_text;
  if (!condition.keypoint_map.empty()) r.keypoint_map = condition.keypoint_map;
  for (const auto& p : condition.dense_pairs) r.segments.push_back({p.caption, p.mask});
  r.payload = x_t;
  return r;
}

std::optional<Message> read_message(Transport& io) {
  auto header = io.read_line();
  if (!header) return std::nullopt;
  Message m{std::move(*header), {}};
  m.binary = io.read_exact(binary_length(m.header));
  return m;
}

void serve_connection(Transport& io, const Handler& handler) {
  while (true) {
    auto header = io.read_line();
    if (!header) return;
    Response resp;
    try {
      Message m{std::move(*header), {}};
      std::size_t n = 0;
      try {
        n = binary_length(m.header);
      } catch (const FormatError&) {
        n = 0;
      }
      m.binary = io.read_exact(n);
      resp = handler(decode_request(m));
    } catch (const std::exception& e) {
      resp = Response{"error", e.what(), {}, std::nullopt};
    }
    io.write_all(encode(resp));
  }
}

Response mock_handler(const Request& request) {
  if (request.op == "capabilities") {
    Response r;
    r.capabilities = Capabilities{"mock-tanh", false, true, 1, {}};
    return r;
  }
  Response r;
  r.epsilon = LatentTensor(request.payload.dims());
  auto in = request.payload.values();
  auto out = r.epsilon.values();
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = mock_epsilon_value(in[i], request.alpha_bar);
  return r;
}

}  // namespace dts::wire
