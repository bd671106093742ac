#include "flowood/serialize.hpp"

#include <cstring>
#include <string>

#include "byte_io.hpp"
#include "flowood/error.hpp"

namespace flowood {

namespace {

constexpr char kMagic[4] = {'F', 'L', 'O', 'D'};
// Guard against absurd allocations from corrupt headers.
constexpr std::uint32_t kMaxDim = 1u << 16;
constexpr std::uint32_t kMaxBlocks = 1u << 10;
constexpr std::uint32_t kMaxHidden = 1u << 20;

void put_floats(detail::ByteWriter& w, std::span<const float> v) {
  for (float x : v) w.put(x);
}

void get_floats(detail::ByteReader& r, std::span<float> v) {
  for (float& x : v) x = r.get<float>();
}

void write_coupling(detail::ByteWriter& w, const Coupling<float>& c) {
  put_floats(w, c.hidden.weight.values());
  put_floats(w, c.hidden.bias);
  put_floats(w, c.output.weight.values());
  put_floats(w, c.output.bias);
}

void read_coupling(detail::ByteReader& r, Coupling<float>& c) {
  get_floats(r, c.hidden.weight.values());
  get_floats(r, c.hidden.bias);
  get_floats(r, c.output.weight.values());
  get_floats(r, c.output.bias);
}

}  // namespace

std::vector<std::byte> serialize(const FlowModel& model) {
  if (!model.actnorm_ready())
    throw ConfigError("cannot serialize a flow with uninitialized ActNorm layers");
  const std::size_t d = model.dim();
  detail::ByteWriter w;
  w.put_raw(std::as_bytes(std::span(kMagic)));
  w.put<std::uint32_t>(kModelFormatVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(d));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(model.block_count()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(model.hidden_width()));
  std::uint32_t flags = 0;
  if (model.trained_on_normalized()) flags |= kFlagNormalized;
  if (model.arch() == FlowArch::kRealNvp) flags |= kFlagRealNvp;
  w.put<std::uint32_t>(flags);

  for (const auto& block : model.blocks()) {
    if (model.arch() == FlowArch::kGlow) {
      put_floats(w, block.actnorm->log_scale);
      put_floats(w, block.actnorm->bias);
      const auto& mix = *block.mixing;
      for (std::uint32_t p : mix.permutation) w.put(p);
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < i; ++j) w.put(mix.lu(i, j));
      for (std::size_t i = 0; i < d; ++i) {
        w.put(mix.sign[i]);
        w.put(mix.log_magnitude[i]);
        for (std::size_t j = i + 1; j < d; ++j) w.put(mix.lu(i, j));
      }
    }
    write_coupling(w, block.coupling);
  }
  return w.take();
}

FlowModel deserialize(std::span<const std::byte> bytes) {
  detail::ByteReader r(bytes, "model file");
  const auto magic = r.get_raw(4);
  if (std::memcmp(magic.data(), kMagic, 4) != 0)
    throw FormatError("model file: bad magic (expected FLOD)");
  const auto version = r.get<std::uint32_t>();
  if (version != kModelFormatVersion)
    throw FormatError("model file: unsupported format version " + std::to_string(version));
  const auto d = r.get<std::uint32_t>();
  const auto blocks = r.get<std::uint32_t>();
  const auto hidden = r.get<std::uint32_t>();
  const auto flags = r.get<std::uint32_t>();
  if (d < 2 || d > kMaxDim || blocks < 1 || blocks > kMaxBlocks || hidden < 1 ||
      hidden > kMaxHidden)
    throw FormatError("model file: implausible dimensions D=" + std::to_string(d) +
                      " blocks=" + std::to_string(blocks) +
                      " hidden=" + std::to_string(hidden));
  if ((flags & ~(kFlagNormalized | kFlagRealNvp)) != 0)
    throw FormatError("model file: unknown flag bits");
  const FlowArch arch = (flags & kFlagRealNvp) ? FlowArch::kRealNvp : FlowArch::kGlow;

  // Build the layout from a spec so every buffer has its final shape.
  FlowModel model(FlowSpec{d, blocks, hidden, arch, 0});
  model.set_trained_on_normalized((flags & kFlagNormalized) != 0);
  for (auto& block : model.blocks()) {
    if (arch == FlowArch::kGlow) {
      auto& an = *block.actnorm;
      get_floats(r, an.log_scale);
      get_floats(r, an.bias);
      an.initialized = true;
      auto& mix = *block.mixing;
      std::vector<bool> seen(d, false);
      for (auto& p : mix.permutation) {
        p = r.get<std::uint32_t>();
        if (p >= d || seen[p])
          throw FormatError("model file: permutation entry " + std::to_string(p) +
                            " is out of range or repeated for D=" + std::to_string(d));
        seen[p] = true;
      }
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < i; ++j) mix.lu(i, j) = r.get<float>();
      for (std::size_t i = 0; i < d; ++i) {
        mix.sign[i] = r.get<std::int8_t>();
        if (mix.sign[i] != 1 && mix.sign[i] != -1)
          throw FormatError("model file: U diagonal sign must be +1 or -1");
        mix.log_magnitude[i] = r.get<float>();
        for (std::size_t j = i + 1; j < d; ++j) mix.lu(i, j) = r.get<float>();
      }
    }
    read_coupling(r, block.coupling);
  }
  if (r.remaining() != 0)
    throw FormatError("model file: " + std::to_string(r.remaining()) +
                      " trailing bytes; header dimensions disagree with payload");
  return model;
}

void save_model(const std::filesystem::path& path, const FlowModel& model) {
  detail::write_file(path, serialize(model));
}

FlowModel load_model(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  try {
    return deserialize(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace flowood
