#include "ecgr/checkpoint.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <sstream>

#include "ecgr/errors.hpp"
#include "ecgr/record_io.hpp"

namespace fs = std::filesystem;

namespace ecgr {

namespace {

constexpr std::string_view kMagic = "ECGR-CHECKPOINT 1";
constexpr std::string_view kEndHeader = "end_header";

std::string join(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

struct Block {
  std::string name;
  std::span<double> data;
};

std::vector<Block> model_blocks(CycleGanModel& m) {
  std::vector<Block> blocks;
  auto add_net = [&](const std::string& prefix, std::vector<ParameterBlock> params, AdamState& opt) {
    for (auto& p : params) blocks.push_back({prefix + "." + p.name, p.values});
    blocks.push_back({prefix + ".adam_m", opt.first_moment});
    blocks.push_back({prefix + ".adam_v", opt.second_moment});
  };
  add_net("gx2c", m.gx2c.parameters(), m.opt_gx2c);
  add_net("gc2x", m.gc2x.parameters(), m.opt_gc2x);
  add_net("dc", m.dc.parameters(), m.opt_dc);
  add_net("dx", m.dx.parameters(), m.opt_dx);
  return blocks;
}

void put_double(std::string& out, double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

double get_double(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

class HeaderReader {
 public:
  HeaderReader(KeyValues kv, std::string origin) : kv_(std::move(kv)), origin_(std::move(origin)) {}

  const std::string& text(const std::string& key) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) throw InputError(origin_ + ": header field '" + key + "' missing");
    return it->second;
  }
  template <typename T>
  T number(const std::string& key) const {
    const std::string& s = text(key);
    T v{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
      throw InputError(origin_ + ": header field '" + key + "' has bad value '" + s + "'");
    return v;
  }
  std::vector<std::size_t> list(const std::string& key) const {
    std::vector<std::size_t> out;
    const std::string& s = text(key);
    std::size_t pos = 0;
    while (pos < s.size()) {
      auto comma = s.find(',', pos);
      if (comma == std::string::npos) comma = s.size();
      std::size_t v = 0;
      const auto [ptr, ec] = std::from_chars(s.data() + pos, s.data() + comma, v);
      if (ec != std::errc() || ptr != s.data() + comma)
        throw InputError(origin_ + ": header field '" + key + "' has bad list '" + s + "'");
      out.push_back(v);
      pos = comma + 1;
    }
    return out;
  }

 private:
  KeyValues kv_;
  std::string origin_;
};

}  // namespace

std::string serialize_checkpoint(const CycleGanModel& model, const TrainConfig& cfg) {
  CycleGanModel& m = const_cast<CycleGanModel&>(model);  // block views only; nothing is written
  const GeneratorConfig& g = model.gx2c.config();
  const DiscriminatorConfig& d = model.dc.config();
  KeyValues kv{
      {"generator.q_order", std::to_string(g.q_order)},
      {"generator.encoder_channels", join(g.encoder_channels)},
      {"generator.kernel_size", std::to_string(g.kernel_size)},
      {"generator.final_kernel_size", std::to_string(g.final_kernel_size)},
      {"generator.stride", std::to_string(g.stride)},
      {"generator.input_channels", std::to_string(g.input_channels)},
      {"discriminator.q_order", std::to_string(d.q_order)},
      {"discriminator.channels", join(d.channels)},
      {"discriminator.kernel_size", std::to_string(d.kernel_size)},
      {"discriminator.strides", join(d.strides)},
      {"discriminator.padding", std::to_string(d.padding)},
      {"discriminator.input_channels", std::to_string(d.input_channels)},
      {"train.lambda_cyc", format_double(cfg.lambda_cyc)},
      {"train.beta_ide", format_double(cfg.beta_ide)},
      {"train.lr", format_double(cfg.lr)},
      {"train.max_iterations", std::to_string(cfg.max_iterations)},
      {"train.batch_size", std::to_string(cfg.batch_size)},
      {"train.seed", std::to_string(cfg.seed)},
      {"train.q_order", std::to_string(cfg.q_order)},
      {"train.adam_beta1", format_double(cfg.adam_beta1)},
      {"train.adam_beta2", format_double(cfg.adam_beta2)},
      {"train.adam_epsilon", format_double(cfg.adam_epsilon)},
      {"train.disc_loss_scale", "0.5"},
      {"model.seed", std::to_string(model.seed)},
      {"model.iteration", std::to_string(model.iteration)},
      {"gx2c.adam_step", std::to_string(model.opt_gx2c.step)},
      {"gc2x.adam_step", std::to_string(model.opt_gc2x.step)},
      {"dc.adam_step", std::to_string(model.opt_dc.step)},
      {"dx.adam_step", std::to_string(model.opt_dx.step)},
  };
  const auto blocks = model_blocks(m);
  std::string out(kMagic);
  out += '\n';
  out += format_key_values(kv);
  std::size_t total = 0;
  for (const auto& b : blocks) {
    out += "block=" + b.name + " " + std::to_string(b.data.size()) + "\n";
    total += b.data.size();
  }
  out += kEndHeader;
  out += '\n';
  out.reserve(out.size() + 8 * total);
  for (const auto& b : blocks)
    for (double v : b.data) put_double(out, v);
  return out;
}

LoadedCheckpoint deserialize_checkpoint(const std::string& bytes, const std::string& origin) {
  if (bytes.compare(0, kMagic.size(), kMagic) != 0 || bytes.size() <= kMagic.size() || bytes[kMagic.size()] != '\n')
    throw InputError(origin + ": not a checkpoint (bad magic line)");
  const std::string marker = "\n" + std::string(kEndHeader) + "\n";
  const auto end = bytes.find(marker);
  if (end == std::string::npos) throw InputError(origin + ": header not terminated");
  const std::string header = bytes.substr(kMagic.size() + 1, end - kMagic.size());
  const std::size_t data_start = end + marker.size();

  KeyValues kv;
  std::vector<std::pair<std::string, std::size_t>> declared;
  std::istringstream lines(header);
  for (std::string line; std::getline(lines, line);) {
    if (line.empty()) continue;
    if (line.rfind("block=", 0) == 0) {
      const auto space = line.rfind(' ');
      if (space == std::string::npos) throw InputError(origin + ": bad block line '" + line + "'");
      declared.emplace_back(line.substr(6, space - 6), std::stoull(line.substr(space + 1)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InputError(origin + ": bad header line '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  const HeaderReader h(kv, origin);

  GeneratorConfig g;
  g.q_order = h.number<std::size_t>("generator.q_order");
  g.encoder_channels = h.list("generator.encoder_channels");
  g.kernel_size = h.number<std::size_t>("generator.kernel_size");
  g.final_kernel_size = h.number<std::size_t>("generator.final_kernel_size");
  g.stride = h.number<std::size_t>("generator.stride");
  g.input_channels = h.number<std::size_t>("generator.input_channels");
  DiscriminatorConfig d;
  d.q_order = h.number<std::size_t>("discriminator.q_order");
  d.channels = h.list("discriminator.channels");
  d.kernel_size = h.number<std::size_t>("discriminator.kernel_size");
  d.strides = h.list("discriminator.strides");
  d.padding = h.number<std::size_t>("discriminator.padding");
  d.input_channels = h.number<std::size_t>("discriminator.input_channels");
  TrainConfig cfg;
  cfg.lambda_cyc = h.number<double>("train.lambda_cyc");
  cfg.beta_ide = h.number<double>("train.beta_ide");
  cfg.lr = h.number<double>("train.lr");
  cfg.max_iterations = h.number<std::size_t>("train.max_iterations");
  cfg.batch_size = h.number<std::size_t>("train.batch_size");
  cfg.seed = h.number<std::uint64_t>("train.seed");
  cfg.q_order = h.number<std::size_t>("train.q_order");
  cfg.adam_beta1 = h.number<double>("train.adam_beta1");
  cfg.adam_beta2 = h.number<double>("train.adam_beta2");
  cfg.adam_epsilon = h.number<double>("train.adam_epsilon");

  LoadedCheckpoint out;
  try {
    g.validate();
    d.validate();
    cfg.validate();
    out.model = CycleGanModel(g, d, cfg);
  } catch (const ConfigError& e) {
    throw InputError(origin + ": inconsistent architecture: " + e.what());
  }
  out.config = cfg;
  out.model.seed = h.number<std::uint64_t>("model.seed");
  out.model.iteration = h.number<std::uint64_t>("model.iteration");
  out.model.opt_gx2c.step = h.number<std::uint64_t>("gx2c.adam_step");
  out.model.opt_gc2x.step = h.number<std::uint64_t>("gc2x.adam_step");
  out.model.opt_dc.step = h.number<std::uint64_t>("dc.adam_step");
  out.model.opt_dx.step = h.number<std::uint64_t>("dx.adam_step");

  const auto blocks = model_blocks(out.model);
  if (blocks.size() != declared.size())
    throw InputError(origin + ": expected " + std::to_string(blocks.size()) + " blocks, header declares " +
                     std::to_string(declared.size()));
  std::size_t total = 0;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (blocks[i].name != declared[i].first || blocks[i].data.size() != declared[i].second)
      throw InputError(origin + ": block " + std::to_string(i) + " is " + declared[i].first + " [" +
                       std::to_string(declared[i].second) + "], architecture needs " + blocks[i].name + " [" +
                       std::to_string(blocks[i].data.size()) + "]");
    total += blocks[i].data.size();
  }
  if (bytes.size() - data_start != 8 * total)
    throw InputError(origin + ": payload holds " + std::to_string(bytes.size() - data_start) + " bytes, expected " +
                     std::to_string(8 * total));
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + data_start);
  for (const auto& b : blocks)
    for (double& v : b.data) {
      v = get_double(p);
      p += 8;
    }
  return out;
}

void save_checkpoint(const fs::path& path, const CycleGanModel& model, const TrainConfig& cfg) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create " + path.parent_path().string() + ": " + ec.message());
  }
  const fs::path tmp = path.string() + ".tmp";
  write_text_file(tmp, serialize_checkpoint(model, cfg));
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into place at " + path.string() + ": " + ec.message());
}

LoadedCheckpoint load_checkpoint(const fs::path& path) {
  return deserialize_checkpoint(read_text_file(path), path.string());
}

}  // namespace ecgr
