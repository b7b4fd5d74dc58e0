#include "ibsher/nn/checkpoint.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace ibsher::nn {

namespace {

constexpr const char* kMagic = "ibsher-mlp";
constexpr int kVersion = 1;

void put_real(std::ostream& out, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), " %a", v);
  out << buf;
}

double get_real(std::istream& in) {
  std::string token;
  if (!(in >> token)) throw IoError("checkpoint truncated while reading a value");
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end == token.c_str() || *end != '\0') throw IoError("malformed real '" + token + "'");
  return v;
}

void expect(std::istream& in, const std::string& word) {
  std::string token;
  if (!(in >> token) || token != word) {
    throw IoError("checkpoint: expected '" + word + "', found '" + token + "'");
  }
}

int get_int(std::istream& in) {
  long long v = 0;
  if (!(in >> v)) throw IoError("checkpoint truncated while reading an integer");
  return static_cast<int>(v);
}

}  // namespace

void write_checkpoint(std::ostream& out, const Mlp& net) {
  out << kMagic << ' ' << kVersion << '\n';
  out << "sizes";
  for (int s : net.layer_sizes()) out << ' ' << s;
  out << "\nactivations";
  for (const auto& l : net.layers) out << ' ' << to_string(l.activation);
  out << "\nnormalize";
  for (const auto& l : net.layers) out << ' ' << (l.normalize ? 1 : 0);
  out << '\n';
  for (std::size_t k = 0; k < net.layers.size(); ++k) {
    const auto& l = net.layers[k];
    out << "layer " << k << " weight";
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) put_real(out, l.weight(r, c));
    out << "\nlayer " << k << " bias";
    for (Eigen::Index c = 0; c < l.bias.size(); ++c) put_real(out, l.bias(c));
    out << "\nlayer " << k << " stats " << (l.stats_initialized ? 1 : 0);
    if (l.normalize) {
      out << " mean";
      for (Eigen::Index c = 0; c < l.running_mean.size(); ++c) put_real(out, l.running_mean(c));
      out << " var";
      for (Eigen::Index c = 0; c < l.running_var.size(); ++c) put_real(out, l.running_var(c));
    }
    out << '\n';
  }
  out << "end\n";
  if (!out) throw IoError("failed writing checkpoint");
}

Mlp read_checkpoint(std::istream& in) {
  std::string magic;
  if (!(in >> magic) || magic != kMagic) throw IoError("not an ibsher MLP checkpoint");
  const int version = get_int(in);
  if (version != kVersion) throw IoError("unsupported checkpoint version " + std::to_string(version));

  std::string line;
  std::getline(in, line);

  auto read_line_tokens = [&](const std::string& key) {
    if (!std::getline(in, line)) throw IoError("checkpoint truncated before '" + key + "'");
    std::istringstream ls(line);
    std::string head;
    ls >> head;
    if (head != key) throw IoError("checkpoint: expected '" + key + "' line");
    std::vector<std::string> tokens;
    for (std::string t; ls >> t;) tokens.push_back(t);
    return tokens;
  };

  std::vector<int> sizes;
  for (const auto& t : read_line_tokens("sizes")) sizes.push_back(std::stoi(t));
  std::vector<Activation> acts;
  for (const auto& t : read_line_tokens("activations")) acts.push_back(parse_activation(t));
  std::vector<bool> norm;
  for (const auto& t : read_line_tokens("normalize")) norm.push_back(t == "1");

  Mlp net = mlp_init(sizes, acts, 0, norm);
  for (std::size_t k = 0; k < net.layers.size(); ++k) {
    auto& l = net.layers[k];
    const std::string idx = std::to_string(k);
    expect(in, "layer");
    expect(in, idx);
    expect(in, "weight");
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = get_real(in);
    expect(in, "layer");
    expect(in, idx);
    expect(in, "bias");
    for (Eigen::Index c = 0; c < l.bias.size(); ++c) l.bias(c) = get_real(in);
    expect(in, "layer");
    expect(in, idx);
    expect(in, "stats");
    l.stats_initialized = get_int(in) != 0;
    if (l.normalize) {
      expect(in, "mean");
      for (Eigen::Index c = 0; c < l.running_mean.size(); ++c) l.running_mean(c) = get_real(in);
      expect(in, "var");
      for (Eigen::Index c = 0; c < l.running_var.size(); ++c) l.running_var(c) = get_real(in);
    }
  }
  expect(in, "end");
  return net;
}

void save_checkpoint(const Mlp& net, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path.string());
  write_checkpoint(out, net);
}

Mlp load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint: " + path.string());
  return read_checkpoint(in);
}

}  // namespace ibsher::nn
