#include "emobias/probe_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "emobias/error.hpp"

namespace emobias {

namespace {

constexpr std::array<char, 8> kMagic = {'E', 'M', 'B', 'P', 'R', 'O', 'B', 'E'};
constexpr std::uint32_t kFormatVersion = 1;

template <typename T>
void put_le(std::ostream& out, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  auto bits = std::bit_cast<U>(value);
  unsigned char bytes[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(U));
}

template <typename T>
T get_le(std::istream& in) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  unsigned char bytes[sizeof(U)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(U))) throw IoError("truncated checkpoint");
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) bits |= static_cast<U>(bytes[i]) << (8 * i);
  return std::bit_cast<T>(bits);
}

nlohmann::json layer_shape(const DenseLayer& l) {
  return {{"inputs", l.inputs}, {"outputs", l.outputs}};
}

DenseLayer shaped_layer(const nlohmann::json& j) {
  DenseLayer l;
  l.inputs = j.at("inputs").get<std::size_t>();
  l.outputs = j.at("outputs").get<std::size_t>();
  l.weights.resize(l.inputs * l.outputs);
  l.bias.resize(l.outputs);
  return l;
}

void write_layer(std::ostream& out, const DenseLayer& l) {
  for (double w : l.weights) put_le(out, w);
  for (double b : l.bias) put_le(out, b);
}

void read_layer(std::istream& in, DenseLayer& l) {
  for (double& w : l.weights) w = get_le<double>(in);
  for (double& b : l.bias) b = get_le<double>(in);
}

}  // namespace

void save_model(const ProbeModel& model, std::ostream& out) {
  nlohmann::json header;
  header["input_dim"] = model.input_dim;
  header["dtype"] = "f64";
  header["hidden"] = nlohmann::json::array();
  for (const auto& l : model.hidden) header["hidden"].push_back(layer_shape(l));
  header["heads"] = nlohmann::json::array();
  for (const auto& h : model.heads) {
    auto hj = layer_shape(h.layer);
    hj["classes"] = h.space.classes;
    hj["level"] = h.space.level ? nlohmann::json(*h.space.level) : nlohmann::json();
    header["heads"].push_back(hj);
  }
  header["seed_lineage"] = model.seed_lineage;
  header["parameter_count"] = model.parameter_count();
  const std::string text = header.dump();

  out.write(kMagic.data(), kMagic.size());
  put_le(out, kFormatVersion);
  put_le(out, static_cast<std::uint64_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& l : model.hidden) write_layer(out, l);
  for (const auto& h : model.heads) write_layer(out, h.layer);
  if (!out) throw IoError("failed writing checkpoint");
}

void save_model(const ProbeModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  save_model(model, out);
}

ProbeModel load_model(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw IoError("not a probe checkpoint");
  }
  if (get_le<std::uint32_t>(in) != kFormatVersion) throw IoError("unsupported checkpoint version");
  const auto length = get_le<std::uint64_t>(in);
  std::string text(length, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(length))) {
    throw IoError("truncated checkpoint header");
  }
  ProbeModel model;
  try {
    const auto header = nlohmann::json::parse(text);
    model.input_dim = header.at("input_dim").get<std::size_t>();
    for (const auto& hj : header.at("hidden")) model.hidden.push_back(shaped_layer(hj));
    for (const auto& hj : header.at("heads")) {
      Head h;
      h.layer = shaped_layer(hj);
      h.space.classes = hj.at("classes").get<std::vector<std::string>>();
      if (!hj.at("level").is_null()) h.space.level = hj.at("level").get<int>();
      model.heads.push_back(std::move(h));
    }
    model.seed_lineage = header.at("seed_lineage").get<std::vector<std::uint64_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed checkpoint header: ") + e.what());
  }
  for (auto& l : model.hidden) read_layer(in, l);
  for (auto& h : model.heads) read_layer(in, h.layer);
  return model;
}

ProbeModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return load_model(in);
}

void write_history_csv(const History& history, std::ostream& out) {
  out << "epoch,loss,accuracy\n";
  const auto flags = out.flags();
  const auto precision = out.precision();
  out << std::setprecision(10);
  for (const auto& e : history) out << e.epoch << ',' << e.loss << ',' << e.accuracy << '\n';
  out.flags(flags);
  out.precision(precision);
}

}  // namespace emobias
