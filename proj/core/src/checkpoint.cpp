#include "modalcur/checkpoint.hpp"

#include "text_format.hpp"

#include <json.hpp>

#include <bit>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace modalcur {

static_assert(std::endian::native == std::endian::little, "checkpoint payload assumes a little-endian host");

namespace {

constexpr const char* kMagic = "modalcur-checkpoint";

void write_doubles(std::ostream& out, const Eigen::VectorXd& v) {
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

Eigen::VectorXd read_doubles(std::istream& in, Eigen::Index n) {
  Eigen::VectorXd v(n);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(n * sizeof(double))) throw std::runtime_error("truncated checkpoint payload");
  return v;
}

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const auto n = ckpt.shape.param_count();
  if (ckpt.params.size() != n || ckpt.adam.m.size() != n || ckpt.adam.v.size() != n)
    throw std::invalid_argument("checkpoint arrays do not match the policy shape");
  std::ostringstream buffer_text;
  write_buffer_snapshot(buffer_text, ckpt.buffer, ckpt.c, ckpt.next_id);

  nlohmann::json h;
  h["version"] = kCheckpointVersion;
  h["config_hash"] = ckpt.config_hash;
  h["seed"] = ckpt.seed;
  h["update"] = ckpt.update;
  h["env_steps"] = ckpt.env_steps;
  h["c"] = ckpt.c;
  h["next_id"] = ckpt.next_id;
  h["shape"] = {{"obs_size", ckpt.shape.obs_size},
                {"hidden", ckpt.shape.hidden},
                {"n_sensors", ckpt.shape.n_sensors},
                {"n_directions", ckpt.shape.n_directions}};
  h["adam_step"] = ckpt.adam.step;
  h["normaliser"] = {text::format_double(ckpt.normaliser.mean()), text::format_double(ckpt.normaliser.var()),
                     text::format_double(ckpt.normaliser.count())};
  h["buffer"] = buffer_text.str();
  h["param_count"] = n;

  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("checkpoint write failed: cannot open " + tmp.string());
    out << kMagic << '\n' << h.dump() << '\n';
    write_doubles(out, ckpt.params);
    write_doubles(out, ckpt.adam.m);
    write_doubles(out, ckpt.adam.v);
    out.flush();
    if (!out) throw std::runtime_error("checkpoint write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw std::runtime_error("checkpoint write failed: " + ec.message());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("missing checkpoint: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kMagic) throw std::runtime_error("not a checkpoint file: " + path.string());
  if (!std::getline(in, line)) throw std::runtime_error("truncated checkpoint header");
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("malformed checkpoint header: ") + e.what());
  }
  if (h.at("version").get<int>() != kCheckpointVersion) throw std::runtime_error("unsupported checkpoint version");
  Checkpoint ckpt;
  ckpt.config_hash = h.at("config_hash").get<std::string>();
  ckpt.seed = h.at("seed").get<std::uint64_t>();
  ckpt.update = h.at("update").get<std::int64_t>();
  ckpt.env_steps = h.at("env_steps").get<std::int64_t>();
  ckpt.c = h.at("c").get<std::int64_t>();
  ckpt.next_id = h.at("next_id").get<std::int64_t>();
  const auto& s = h.at("shape");
  ckpt.shape = {s.at("obs_size").get<int>(), s.at("hidden").get<int>(), s.at("n_sensors").get<int>(),
                s.at("n_directions").get<int>()};
  const auto& rn = h.at("normaliser");
  ckpt.normaliser = ReturnNormaliser(text::parse_double(rn.at(0).get<std::string>()),
                                     text::parse_double(rn.at(1).get<std::string>()),
                                     text::parse_double(rn.at(2).get<std::string>()));
  std::istringstream buffer_text(h.at("buffer").get<std::string>());
  auto snap = read_buffer_snapshot(buffer_text);
  ckpt.buffer = std::move(snap.buffer);
  const auto n = h.at("param_count").get<Eigen::Index>();
  if (n != ckpt.shape.param_count()) throw std::runtime_error("checkpoint parameter count does not match its shape");
  ckpt.params = read_doubles(in, n);
  ckpt.adam.m = read_doubles(in, n);
  ckpt.adam.v = read_doubles(in, n);
  ckpt.adam.step = h.at("adam_step").get<std::int64_t>();
  if (in.peek() != std::char_traits<char>::eof()) throw std::runtime_error("trailing bytes after checkpoint payload");
  return ckpt;
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string file_hash(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a(ss.str())));
  return buf;
}

}  // namespace modalcur
