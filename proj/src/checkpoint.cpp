#include "mdcn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>

namespace mdcn {

namespace {

constexpr char kMagic[4] = {'M', 'D', 'C', 'N'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint8_t kDtypeF32 = 0;

void put_u8(std::vector<std::uint8_t>& out, std::uint8_t v) { out.push_back(v); }

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_i64(std::vector<std::uint8_t>& out, std::int64_t v) {
  auto u = static_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
}

void put_str(std::vector<std::uint8_t>& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.insert(out.end(), s.begin(), s.end());
}

void put_f32(std::vector<std::uint8_t>& out, float v) {
  put_u32(out, std::bit_cast<std::uint32_t>(v));
}

// Cursor over a byte buffer; every structural failure reports the offset
// where parsing stopped.
struct Reader {
  const std::vector<std::uint8_t>& buf;
  size_t pos = 0;

  void need(size_t n, const char* what) {
    if (pos + n > buf.size())
      throw FormatError(std::string("unexpected end of file reading ") + what, pos);
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return buf[pos++];
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(buf[pos + i]) << (8 * i);
    pos += 4;
    return v;
  }
  std::int64_t i64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(buf[pos + i]) << (8 * i);
    pos += 8;
    return static_cast<std::int64_t>(v);
  }
  std::string str(const char* what) {
    std::uint32_t n = u32(what);
    if (n > 4096) throw FormatError(std::string("implausible string length for ") + what, pos - 4);
    need(n, what);
    std::string s(reinterpret_cast<const char*>(buf.data() + pos), n);
    pos += n;
    return s;
  }
  float f32(const char* what) { return std::bit_cast<float>(u32(what)); }
};

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const ModelParams<float>& m) {
  std::vector<std::uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + 4);
  put_u32(out, kVersion);

  const std::vector<std::pair<std::string, std::int64_t>> fields = {
      {"feat", m.config.feat},
      {"growth", m.config.growth},
      {"blocks", m.config.blocks},
      {"units", m.config.units},
      {"scale", m.config.scale},
      {"in_channels", m.config.in_channels},
      {"global_skip", m.config.global_skip ? 1 : 0},
  };
  put_u32(out, static_cast<std::uint32_t>(fields.size()));
  for (const auto& [key, value] : fields) {
    put_str(out, key);
    put_i64(out, value);
  }

  std::uint32_t count = 0;
  m.visit([&count](const std::string&, const std::vector<float>&, const Shape4&) { ++count; });
  put_u32(out, count);
  m.visit([&out](const std::string& name, const std::vector<float>& flat, const Shape4& sh) {
    put_str(out, name);
    put_u8(out, kDtypeF32);
    for (int64_t e : sh) put_u32(out, static_cast<std::uint32_t>(e));
    for (float v : flat) put_f32(out, v);
  });
  return out;
}

ModelParams<float> deserialize_checkpoint(const std::vector<std::uint8_t>& bytes) {
  Reader r{bytes};
  r.need(4, "magic");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw FormatError("bad magic, not a checkpoint", 0);
  r.pos = 4;
  const std::uint32_t version = r.u32("version");
  if (version != kVersion)
    throw FormatError("unsupported checkpoint version " + std::to_string(version), 4);

  NetConfig cfg;
  std::map<std::string, bool> seen;
  const std::uint32_t nfields = r.u32("config field count");
  for (std::uint32_t i = 0; i < nfields; ++i) {
    const std::string key = r.str("config key");
    const std::int64_t value = r.i64("config value");
    if (key == "feat") cfg.feat = value;
    else if (key == "growth") cfg.growth = value;
    else if (key == "blocks") cfg.blocks = value;
    else if (key == "units") cfg.units = value;
    else if (key == "scale") cfg.scale = value;
    else if (key == "in_channels") cfg.in_channels = value;
    else if (key == "global_skip") cfg.global_skip = value != 0;
    // Unknown tags are tolerated so the format can grow fields.
    seen[key] = true;
  }
  for (const char* req : {"feat", "growth", "blocks", "units", "scale", "in_channels"})
    if (!seen.count(req))
      throw FormatError(std::string("config is missing field \"") + req + "\"", r.pos);
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("stored config invalid: ") + e.what(), r.pos);
  }

  ModelParams<float> m = ModelParams<float>::shaped(cfg);
  std::map<std::string, std::pair<std::vector<float>*, Shape4>> slots;
  m.visit([&slots](const std::string& name, std::vector<float>& flat, const Shape4& sh) {
    slots.emplace(name, std::make_pair(&flat, sh));
  });

  std::map<std::string, bool> filled;
  const std::uint32_t ntensors = r.u32("tensor count");
  for (std::uint32_t i = 0; i < ntensors; ++i) {
    const size_t rec_start = r.pos;
    const std::string name = r.str("tensor name");
    const std::uint8_t dtype = r.u8("dtype tag");
    if (dtype != kDtypeF32)
      throw FormatError("unknown dtype tag " + std::to_string(int(dtype)) + " for " + name,
                        r.pos - 1);
    Shape4 sh;
    for (int e = 0; e < 4; ++e) sh[static_cast<size_t>(e)] = r.u32("extent");

    auto it = slots.find(name);
    if (it == slots.end())
      throw FormatError("tensor \"" + name + "\" does not belong to the stored config",
                        rec_start);
    if (it->second.second != sh)
      throw FormatError("tensor \"" + name + "\" has shape " + shape_str(sh) +
                            ", expected " + shape_str(it->second.second),
                        rec_start);
    if (filled.count(name)) throw FormatError("duplicate tensor \"" + name + "\"", rec_start);

    std::vector<float>& dst = *it->second.first;
    for (size_t k = 0; k < dst.size(); ++k) dst[k] = r.f32("tensor payload");
    filled[name] = true;
  }
  if (filled.size() != slots.size())
    throw FormatError("checkpoint has " + std::to_string(filled.size()) + " of " +
                          std::to_string(slots.size()) + " parameter tensors",
                      r.pos);
  if (r.pos != bytes.size())
    throw FormatError("trailing bytes after checkpoint payload", r.pos);
  return m;
}

void save_checkpoint(const std::string& path, const ModelParams<float>& m) {
  const std::vector<std::uint8_t> bytes = serialize_checkpoint(m);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path);
}

ModelParams<float> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw IoError("cannot open " + path);
  const std::streamsize size = in.tellg();
  in.seekg(0);
  std::vector<std::uint8_t> bytes(static_cast<size_t>(size));
  in.read(reinterpret_cast<char*>(bytes.data()), size);
  if (!in) throw IoError("short read from " + path);
  return deserialize_checkpoint(bytes);
}

}  // namespace mdcn
