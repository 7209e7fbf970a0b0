// Line-delimited JSON protocol: client over a child process, and the
// matching request handler used by `axisedit serve-mock`.

#include <cerrno>
#include <csignal>
#include <cstdio>
#include <cstring>
#include <istream>
#include <ostream>

#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "axisedit/backend.hpp"

namespace axisedit {

using nlohmann::json;

namespace {

json latent_to_json(const ExtendedLatent& v) {
  const auto& b = v.blocks();
  std::vector<double> flat(b.data(), b.data() + b.size());
  return json{{"layers", v.layers()}, {"dim", v.dim()}, {"latent", std::move(flat)}};
}

ExtendedLatent latent_from_json(const json& j) {
  const auto layers = j.at("layers").get<Eigen::Index>();
  const auto dim = j.at("dim").get<Eigen::Index>();
  const auto flat = j.at("latent").get<std::vector<double>>();
  if (layers <= 0 || dim <= 0 || static_cast<std::size_t>(layers * dim) != flat.size()) {
    throw DimensionError("latent payload: " + std::to_string(flat.size()) + " values for " + std::to_string(layers) +
                         "x" + std::to_string(dim));
  }
  return ExtendedLatent(Eigen::Map<const ExtendedLatent::Blocks>(flat.data(), layers, dim));
}

}  // namespace

// ---------------------------------------------------------------- server side

std::string handle_request(ModelBackend& backend, const std::string& line) {
  json id = nullptr;
  auto fail = [&](const std::string& code, const std::string& message) {
    return json{{"id", id}, {"ok", false}, {"error", {{"code", code}, {"message", message}}}}.dump();
  };
  try {
    const json req = json::parse(line);
    if (req.contains("id")) id = req["id"];
    const std::string op = req.at("op").get<std::string>();
    const json& payload = req.contains("payload") ? req["payload"] : json::object();
    json result;
    if (op == "decode") {
      result = {{"image", backend.decode(latent_from_json(payload)).id}};
    } else if (op == "encode") {
      result = latent_to_json(backend.encode({payload.at("image").get<std::string>()}));
    } else if (op == "classify") {
      const auto s = backend.classify_sex({payload.at("image").get<std::string>()});
      result = {{"label", std::string(to_string(s.label))}, {"confidence", s.confidence}};
    } else {
      return fail("bad_request", "unknown op '" + op + "'");
    }
    return json{{"id", id}, {"ok", true}, {"result", std::move(result)}}.dump();
  } catch (const UnknownImageError& e) {
    return fail("unknown_image", e.what());
  } catch (const DimensionError& e) {
    return fail("dimension_mismatch", e.what());
  } catch (const json::exception& e) {
    return fail("bad_request", e.what());
  } catch (const std::exception& e) {
    return fail("internal", e.what());
  }
}

void serve_backend(ModelBackend& backend, std::istream& in, std::ostream& out) {
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out << handle_request(backend, line) << '\n';
    out.flush();
  }
}

// ---------------------------------------------------------------- client side

struct ExternalBackend::Process {
  pid_t pid = -1;
  FILE* to_child = nullptr;
  FILE* from_child = nullptr;

  ~Process() {
    if (to_child) std::fclose(to_child);
    if (from_child) std::fclose(from_child);
    if (pid > 0) {
      int status = 0;
      while (waitpid(pid, &status, 0) < 0 && errno == EINTR) {
      }
    }
  }
};

ExternalBackend::ExternalBackend(const std::string& command, Geometry geometry)
    : geometry_(geometry), proc_(std::make_unique<Process>()) {
  if (geometry.dim <= 0 || geometry.layers <= 0) throw InvalidArgument("external backend: bad geometry");
  std::signal(SIGPIPE, SIG_IGN);

  int in_pipe[2];   // parent -> child
  int out_pipe[2];  // child -> parent
  if (pipe(in_pipe) != 0) throw TransportError(std::string("external backend: pipe: ") + std::strerror(errno));
  if (pipe(out_pipe) != 0) {
    close(in_pipe[0]);
    close(in_pipe[1]);
    throw TransportError(std::string("external backend: pipe: ") + std::strerror(errno));
  }
  const pid_t pid = fork();
  if (pid < 0) {
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) close(fd);
    throw TransportError(std::string("external backend: fork: ") + std::strerror(errno));
  }
  if (pid == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) close(fd);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  proc_->pid = pid;
  proc_->to_child = fdopen(in_pipe[1], "w");
  proc_->from_child = fdopen(out_pipe[0], "r");
  if (!proc_->to_child || !proc_->from_child) throw TransportError("external backend: fdopen failed");
}

ExternalBackend::~ExternalBackend() = default;

std::string ExternalBackend::round_trip(const std::string& request_line) {
  if (std::fputs(request_line.c_str(), proc_->to_child) == EOF || std::fputc('\n', proc_->to_child) == EOF ||
      std::fflush(proc_->to_child) != 0) {
    throw TransportError("external backend: write to model server failed");
  }
  std::string line;
  for (int ch; (ch = std::fgetc(proc_->from_child)) != EOF;) {
    if (ch == '\n') return line;
    line.push_back(static_cast<char>(ch));
  }
  throw TransportError("external backend: model server closed the connection");
}

namespace {

json call(const std::string& response_line, const std::string& expected_id) {
  json resp;
  try {
    resp = json::parse(response_line);
  } catch (const json::exception& e) {
    throw TransportError(std::string("external backend: malformed response: ") + e.what());
  }
  if (!resp.contains("id") || resp["id"] != expected_id) throw TransportError("external backend: response id mismatch");
  if (resp.value("ok", false)) return resp.at("result");
  const json err = resp.value("error", json::object());
  const std::string code = err.is_object() ? err.value("code", std::string("internal")) : "internal";
  const std::string message = err.is_object() ? err.value("message", std::string()) : err.dump();
  if (code == "unknown_image") throw UnknownImageError(message);
  if (code == "dimension_mismatch") throw DimensionError(message);
  throw TransportError("external backend: " + code + ": " + message);
}

}  // namespace

ExtendedLatent ExternalBackend::encode(const ImageHandle& img) {
  std::lock_guard lock(mu_);
  const std::string id = "req-" + std::to_string(next_request_++);
  const json req{{"op", "encode"}, {"id", id}, {"payload", {{"image", img.id}}}};
  try {
    auto v = latent_from_json(call(round_trip(req.dump()), id));
    if (v.geometry() != geometry_) throw DimensionError("external backend: encoded latent has unexpected shape");
    return v;
  } catch (const json::exception& e) {
    throw TransportError(std::string("external backend: bad encode result: ") + e.what());
  }
}

ImageHandle ExternalBackend::decode(const ExtendedLatent& v) {
  if (v.geometry() != geometry_) throw DimensionError("external backend: latent shape does not match backend geometry");
  std::lock_guard lock(mu_);
  const std::string id = "req-" + std::to_string(next_request_++);
  const json req{{"op", "decode"}, {"id", id}, {"payload", latent_to_json(v)}};
  try {
    return {call(round_trip(req.dump()), id).at("image").get<std::string>()};
  } catch (const json::exception& e) {
    throw TransportError(std::string("external backend: bad decode result: ") + e.what());
  }
}

SexLabel ExternalBackend::classify_sex(const ImageHandle& img) {
  std::lock_guard lock(mu_);
  const std::string id = "req-" + std::to_string(next_request_++);
  const json req{{"op", "classify"}, {"id", id}, {"payload", {{"image", img.id}}}};
  try {
    const json r = call(round_trip(req.dump()), id);
    SexLabel out{parse_label(r.at("label").get<std::string>()), r.at("confidence").get<double>()};
    if (!(out.confidence >= 0.0 && out.confidence <= 1.0)) throw TransportError("external backend: confidence outside [0, 1]");
    return out;
  } catch (const json::exception& e) {
    throw TransportError(std::string("external backend: bad classify result: ") + e.what());
  }
}

}  // namespace axisedit
