#include "optit/nn/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace optit::nn {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'O', 'P', 'T', 'C'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
std::uint32_t read_u32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}
void write_string(std::ostream& os, const std::string& s) {
  write_u32(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}
std::string read_string(std::istream& is) {
  std::uint32_t n = read_u32(is);
  std::string s(n, '\0');
  is.read(s.data(), n);
  return s;
}
void write_dims(std::ostream& os, const std::vector<int>& dims) {
  write_u32(os, static_cast<std::uint32_t>(dims.size()));
  for (int d : dims) write_u32(os, static_cast<std::uint32_t>(d));
}
std::vector<int> read_dims(std::istream& is) {
  std::uint32_t n = read_u32(is);
  std::vector<int> dims(n);
  for (auto& d : dims) d = static_cast<int>(read_u32(is));
  return dims;
}

}  // namespace

void save_checkpoint(const Model<float>& m, const std::string& manifest,
                     const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  require(os.good(), "save_checkpoint: cannot open " + path);
  os.write(kMagic, 4);
  write_u32(os, kVersion);
  write_u32(os, static_cast<std::uint32_t>(m.obs_dim()));
  write_u32(os, static_cast<std::uint32_t>(m.num_actions));
  write_u32(os, static_cast<std::uint32_t>(m.num_options));
  write_u32(os, m.has_psi ? 1 : 0);
  write_dims(os, m.policy.hidden());
  write_string(os, manifest);
  auto dump = [&](std::span<const float> p) {
    os.write(reinterpret_cast<const char*>(p.data()),
             static_cast<std::streamsize>(p.size() * sizeof(float)));
  };
  dump(m.policy.params());
  dump(m.value.params());
  require(os.good(), "save_checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(is.good(), "load_checkpoint: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  require(std::memcmp(magic, kMagic, 4) == 0, "load_checkpoint: bad magic");
  require(read_u32(is) == kVersion, "load_checkpoint: unsupported version");
  int obs_dim = static_cast<int>(read_u32(is));
  int num_actions = static_cast<int>(read_u32(is));
  int num_options = static_cast<int>(read_u32(is));
  bool has_psi = read_u32(is) != 0;
  std::vector<int> hidden = read_dims(is);

  Checkpoint ck;
  ck.model = Model<float>::make(obs_dim, hidden, num_options, num_actions, has_psi);
  ck.manifest = read_string(is);
  auto slurp = [&](std::span<float> p) {
    is.read(reinterpret_cast<char*>(p.data()),
            static_cast<std::streamsize>(p.size() * sizeof(float)));
  };
  slurp(ck.model.policy.params());
  slurp(ck.model.value.params());
  require(is.good(), "load_checkpoint: truncated file " + path);
  return ck;
}

std::string describe_checkpoint(const std::string& path) {
  Checkpoint ck = load_checkpoint(path);
  const Model<float>& m = ck.model;
  std::ostringstream out;
  out << "checkpoint " << path << "\n"
      << "  obs_dim=" << m.obs_dim() << " actions=" << m.num_actions
      << " options=" << m.num_options << " psi=" << (m.has_psi ? "yes" : "no") << "\n"
      << "  manifest=" << (ck.manifest.empty() ? "(none)" : ck.manifest) << "\n";
  auto describe_net = [&](const char* name, const Net<float>& net,
                          const std::vector<std::string>& head_names) {
    out << "  " << name << " params=" << net.param_count() << "\n";
    auto norm = [&](const LinearSpec& l) {
      double s = 0;
      auto p = net.params();
      for (std::size_t i = 0; i < static_cast<std::size_t>(l.in) * l.out + l.out; ++i) {
        double x = p[l.w + i];
        s += x * x;
      }
      return std::sqrt(s);
    };
    for (std::size_t i = 0; i < net.hidden().size(); ++i) {
      const LinearSpec& l = net.hidden_layer(static_cast<int>(i));
      out << "    hidden[" << i << "] " << l.out << "x" << l.in
          << " |w|=" << norm(l) << "\n";
    }
    for (int h = 0; h < net.num_heads(); ++h) {
      const LinearSpec& l = net.head_layer(h);
      out << "    " << head_names[h] << " " << l.out << "x" << l.in
          << " |w|=" << norm(l) << "\n";
    }
  };
  std::vector<std::string> names;
  for (int n = 0; n < m.num_options; ++n) names.push_back("option[" + std::to_string(n) + "]");
  names.push_back("rho");
  if (m.has_psi) names.push_back("psi");
  describe_net("policy", m.policy, names);
  describe_net("value", m.value, {"value"});
  return out.str();
}

}  // namespace optit::nn
