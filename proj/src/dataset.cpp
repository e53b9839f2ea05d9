#include "rop/dataset.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "rop/error.hpp"
#include "rop/png_io.hpp"
#include "rop/rng.hpp"

namespace rop {

using ordered_json = nlohmann::ordered_json;

std::string_view split_name(Split s) noexcept {
  switch (s) {
    case Split::Train: return "train";
    case Split::Test: return "test";
    case Split::Validation: return "validation";
  }
  return "?";
}

std::optional<Split> split_from_name(std::string_view name) noexcept {
  for (Split s : kSplits) {
    if (split_name(s) == name) return s;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Splitting and augmentation

std::array<std::size_t, 3> apportion(std::size_t n, const SplitRatios& ratios) {
  const std::array<std::uint64_t, 3> r{ratios.train, ratios.test, ratios.validation};
  const std::uint64_t total = r[0] + r[1] + r[2];
  std::array<std::size_t, 3> counts{};
  std::uint64_t cumulative = 0;
  std::size_t previous = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    cumulative += r[k];
    const auto boundary = static_cast<std::size_t>((n * cumulative + total - 1) / total);
    counts[k] = boundary - previous;
    previous = boundary;
  }
  return counts;
}

DatasetManifest split(std::vector<SampleRecord> records, const SplitRatios& ratios,
                      std::uint64_t seed) {
  if (records.empty()) throw std::invalid_argument("cannot split an empty record list");
  if (ratios.train == 0 || ratios.test == 0 || ratios.validation == 0) {
    throw std::invalid_argument("split ratios must be positive");
  }
  std::set<std::string> ids;
  for (const auto& r : records) {
    if (r.stage == StageLabel::RopFree) {
      throw std::invalid_argument("record '" + r.id + "' has ROP-free as ground truth");
    }
    if (!ids.insert(r.id).second) throw std::invalid_argument("duplicate record id '" + r.id + "'");
  }

  const SplitMix64 root(seed);
  DatasetManifest manifest;
  manifest.seed = seed;
  for (StageLabel stage : kStages) {
    std::vector<SampleRecord> bucket;
    for (auto& r : records) {
      if (r.stage == stage) bucket.push_back(std::move(r));
    }
    SplitMix64 rng = root.fork(static_cast<std::uint64_t>(stage_number(stage)));
    shuffle(std::span(bucket), rng);

    const auto counts = apportion(bucket.size(), ratios);
    std::size_t next = 0;
    for (Split s : kSplits) {
      for (std::size_t i = 0; i < counts[static_cast<std::size_t>(s)]; ++i, ++next) {
        SampleRecord& r = bucket[next];
        r.split = s;
        r.group_id = r.id;
        r.is_augmented = false;
        r.augmentation.reset();
        manifest.records.push_back(std::move(r));
      }
    }
  }
  return manifest;
}

DatasetManifest augment_class(DatasetManifest manifest, StageLabel stage, int factor,
                              std::uint64_t seed) {
  if (factor < 1) throw std::invalid_argument("augmentation factor must be >= 1");
  if (factor == 1) return manifest;

  std::set<std::string> ids;
  for (const auto& r : manifest.records) ids.insert(r.id);

  SplitMix64 rng = SplitMix64(seed).fork(0x61756728ULL);
  constexpr double kMaxCrop = EdgeCrop::kMaxFraction;
  std::vector<SampleRecord> out;
  out.reserve(manifest.records.size());
  for (auto& original : manifest.records) {
    const bool target =
        original.stage == stage && original.split == Split::Train && !original.is_augmented;
    out.push_back(std::move(original));
    if (!target) continue;
    const SampleRecord& src = out.back();
    std::vector<SampleRecord> copies;
    for (int k = 1; k < factor; ++k) {
      SampleRecord copy = src;
      copy.id = src.id + "_aug" + std::to_string(k);
      if (!ids.insert(copy.id).second) {
        throw std::invalid_argument("augmented id '" + copy.id + "' collides with an existing record");
      }
      copy.is_augmented = true;
      Augmentation aug;
      aug.crop.top = rng.uniform(0.0, kMaxCrop);
      aug.crop.bottom = rng.uniform(0.0, kMaxCrop);
      aug.crop.left = rng.uniform(0.0, kMaxCrop);
      aug.crop.right = rng.uniform(0.0, kMaxCrop);
      aug.zoom = rng.uniform(1.0, 1.1);
      copy.augmentation = aug;
      copies.push_back(std::move(copy));
    }
    for (auto& c : copies) out.push_back(std::move(c));
  }
  manifest.records = std::move(out);
  return manifest;
}

void check_group_integrity(const DatasetManifest& manifest) {
  std::set<std::string> ids;
  std::map<std::string, Split> group_split;
  std::map<std::string, int> originals;
  for (const auto& r : manifest.records) {
    if (!ids.insert(r.id).second) throw Error("duplicate record id '" + r.id + "'");
    const auto [it, fresh] = group_split.emplace(r.group_id, r.split);
    if (!fresh && it->second != r.split) {
      throw Error("group '" + r.group_id + "' spans the " + std::string(split_name(it->second)) +
                  " and " + std::string(split_name(r.split)) + " splits");
    }
    originals[r.group_id] += r.is_augmented ? 0 : 1;
  }
  for (const auto& [group, n] : originals) {
    if (n != 1) {
      throw Error("group '" + group + "' has " + std::to_string(n) + " original records");
    }
  }
}

CountTable count_table(const DatasetManifest& manifest) {
  CountTable t;
  for (const auto& r : manifest.records) {
    if (r.stage == StageLabel::RopFree) continue;
    ++t.counts[static_cast<std::size_t>(stage_number(r.stage) - 1)][static_cast<std::size_t>(r.split)];
  }
  return t;
}

void print_count_table(std::ostream& os, const CountTable& before, const CountTable& after) {
  os << std::setw(10) << "" << " | " << std::setw(26) << "Without Augmentation"
     << " | " << std::setw(26) << "With Augmentation" << '\n';
  os << std::setw(10) << "" << " |";
  for (int block = 0; block < 2; ++block) {
    os << std::setw(7) << "Train" << std::setw(7) << "Test" << std::setw(12) << "Validation"
       << " |";
  }
  os << '\n';
  for (StageLabel s : kStages) {
    os << std::setw(10) << stage_name(s) << " |";
    for (const CountTable* t : {&before, &after}) {
      os << std::setw(7) << t->at(s, Split::Train) << std::setw(7) << t->at(s, Split::Test)
         << std::setw(12) << t->at(s, Split::Validation) << " |";
    }
    os << '\n';
  }
}

// ---------------------------------------------------------------------------
// Materialization

GrayImage materialize_image(const GrayImage& source, const SampleRecord& record,
                            const MaterializeOptions& opts) {
  GrayImage img = clahe(equalize(source), opts.clahe);
  if (record.is_augmented && record.augmentation) {
    img = center_zoom(crop_edges(img, record.augmentation->crop), record.augmentation->zoom);
  }
  return resize_bilinear(img, opts.output_size, opts.output_size);
}

GrayImage materialize(const SampleRecord& record, const MaterializeOptions& opts) {
  GrayImage source;
  try {
    source = png::read_gray(opts.image_root / record.source_path);
  } catch (const IoError& e) {
    throw IoError("record '" + record.id + "': " + e.what());
  }
  if (record.source_width != 0 &&
      (source.width() != record.source_width || source.height() != record.source_height)) {
    throw IoError("record '" + record.id + "': source is " + std::to_string(source.width()) + "x" +
                  std::to_string(source.height()) + ", manifest says " +
                  std::to_string(record.source_width) + "x" + std::to_string(record.source_height));
  }
  return materialize_image(source, record, opts);
}

FrameMap frame_map(const SampleRecord& record, int output_width, int output_height) {
  if (record.source_width < 1 || record.source_height < 1) {
    throw Error("record '" + record.id + "' has no source dimensions");
  }
  FrameMap m;
  double w = record.source_width;
  double h = record.source_height;
  if (record.is_augmented && record.augmentation) {
    const CropBox edge =
        edge_crop_box(record.source_width, record.source_height, record.augmentation->crop);
    const CropBox zoom = zoom_box(edge.width, edge.height, record.augmentation->zoom);
    m.offset_x = edge.x + zoom.x;
    m.offset_y = edge.y + zoom.y;
    w = zoom.width;
    h = zoom.height;
  }
  m.scale_x = output_width / w;
  m.scale_y = output_height / h;
  return m;
}

std::vector<BinaryMask> ground_truth_masks(const SampleRecord& record, int output_width,
                                           int output_height) {
  const FrameMap map = frame_map(record, output_width, output_height);
  std::vector<BinaryMask> masks;
  masks.reserve(record.polygons.size());
  for (const auto& poly : record.polygons) {
    AnnotatedPolygon mapped{{}, poly.stage};
    mapped.vertices.reserve(poly.vertices.size());
    for (const Point& p : poly.vertices) mapped.vertices.push_back(map.apply(p));
    masks.push_back(rasterize(mapped, output_width, output_height).mask);
  }
  return masks;
}

// ---------------------------------------------------------------------------
// Fused samples

FusedSample fuse(const GrayImage& img, const BinaryMask& mask) {
  if (img.width() != mask.width() || img.height() != mask.height()) {
    throw DimensionMismatch("image and mask dimensions differ");
  }
  const StandardizedImage std_img = standardize(img);
  FusedSample s{img.width(), img.height(), {}, {}};
  s.channel0.assign(std_img.data.begin(), std_img.data.end());
  s.channel1.reserve(mask.size());
  for (std::uint8_t b : mask.bits()) s.channel1.push_back(b ? 1.0f : 0.0f);
  return s;
}

namespace {

constexpr std::array<std::uint8_t, 4> kFusedMagic{'R', 'O', 'P', 'F'};
constexpr std::uint16_t kFusedVersion = 1;
constexpr std::size_t kFusedHeader = 4 + 2 + 4 + 4 + 1;

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
  }
}

template <typename T>
T get_le(std::span<const std::uint8_t> in, std::size_t pos) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(in[pos + i]) << (8 * i));
  return v;
}

}  // namespace

std::vector<std::uint8_t> encode_fused(const FusedSample& s) {
  const std::size_t n = static_cast<std::size_t>(s.width) * static_cast<std::size_t>(s.height);
  if (s.width < 1 || s.height < 1 || s.channel0.size() != n || s.channel1.size() != n) {
    throw DimensionMismatch("fused sample channels do not match its dimensions");
  }
  std::vector<std::uint8_t> out;
  out.reserve(kFusedHeader + 2 * n * 4);
  out.insert(out.end(), kFusedMagic.begin(), kFusedMagic.end());
  put_le<std::uint16_t>(out, kFusedVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.width));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.height));
  put_le<std::uint8_t>(out, FusedSample::kChannels);
  for (const auto* channel : {&s.channel0, &s.channel1}) {
    for (float f : *channel) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(f));
  }
  return out;
}

FusedSample decode_fused(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kFusedHeader) throw FormatError("fused sample truncated in header");
  if (!std::equal(kFusedMagic.begin(), kFusedMagic.end(), bytes.begin())) {
    throw FormatError("bad magic, not a fused sample");
  }
  const auto version = get_le<std::uint16_t>(bytes, 4);
  if (version != kFusedVersion) {
    throw FormatError("unsupported fused sample version " + std::to_string(version));
  }
  const auto width = get_le<std::uint32_t>(bytes, 6);
  const auto height = get_le<std::uint32_t>(bytes, 10);
  const auto channels = get_le<std::uint8_t>(bytes, 14);
  if (channels != FusedSample::kChannels) {
    throw FormatError("expected 2 channels, found " + std::to_string(channels));
  }
  constexpr std::uint64_t kMaxSide = 1u << 16;
  if (width == 0 || height == 0 || width > kMaxSide || height > kMaxSide) {
    throw FormatError("fused sample dimensions " + std::to_string(width) + "x" +
                      std::to_string(height) + " out of range");
  }
  const std::uint64_t n = std::uint64_t{width} * height;
  const std::uint64_t payload = n * channels * 4;
  if (bytes.size() - kFusedHeader < payload) throw FormatError("fused sample truncated");
  if (bytes.size() - kFusedHeader > payload) throw FormatError("trailing bytes after fused sample");

  FusedSample s{static_cast<int>(width), static_cast<int>(height), {}, {}};
  s.channel0.resize(n);
  s.channel1.resize(n);
  std::size_t pos = kFusedHeader;
  for (auto* channel : {&s.channel0, &s.channel1}) {
    for (float& f : *channel) {
      f = std::bit_cast<float>(get_le<std::uint32_t>(bytes, pos));
      pos += 4;
    }
  }
  for (float f : s.channel1) {
    if (f != 0.0f && f != 1.0f) throw FormatError("mask channel holds a value other than 0 or 1");
  }
  return s;
}

void write_fused(const FusedSample& sample, const std::filesystem::path& path) {
  const auto bytes = encode_fused(sample);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("cannot write '" + path.string() + "'");
}

FusedSample read_fused(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in),
                                        std::istreambuf_iterator<char>()};
  try {
    return decode_fused(bytes);
  } catch (const FormatError& e) {
    throw FormatError("'" + path.string() + "': " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Manifest JSON

namespace {

ordered_json polygon_json(const AnnotatedPolygon& p) {
  ordered_json xs = ordered_json::array();
  ordered_json ys = ordered_json::array();
  for (const Point& v : p.vertices) {
    xs.push_back(v.x);
    ys.push_back(v.y);
  }
  return {{"stage", stage_number(p.stage)}, {"x", xs}, {"y", ys}};
}

AnnotatedPolygon polygon_from(const ordered_json& j) {
  AnnotatedPolygon p;
  const auto stage = stage_from_number(j.at("stage").get<long>());
  if (!stage) throw Error("polygon has invalid stage " + j.at("stage").dump());
  p.stage = *stage;
  const auto& xs = j.at("x");
  const auto& ys = j.at("y");
  if (xs.size() != ys.size()) throw Error("polygon x/y lengths differ");
  for (std::size_t i = 0; i < xs.size(); ++i) p.vertices.push_back({xs[i].get<double>(), ys[i].get<double>()});
  return p;
}

}  // namespace

ordered_json manifest_to_json(const DatasetManifest& m) {
  ordered_json records = ordered_json::array();
  for (const auto& r : m.records) {
    ordered_json j;
    j["id"] = r.id;
    j["source_path"] = r.source_path;
    j["stage"] = stage_number(r.stage);
    j["split"] = split_name(r.split);
    j["group_id"] = r.group_id;
    j["is_augmented"] = r.is_augmented;
    j["source_width"] = r.source_width;
    j["source_height"] = r.source_height;
    if (r.augmentation) {
      const auto& a = *r.augmentation;
      j["augmentation"] = {{"crop",
                            {{"top", a.crop.top},
                             {"bottom", a.crop.bottom},
                             {"left", a.crop.left},
                             {"right", a.crop.right}}},
                           {"zoom", a.zoom}};
    }
    ordered_json polys = ordered_json::array();
    for (const auto& p : r.polygons) polys.push_back(polygon_json(p));
    j["polygons"] = std::move(polys);
    records.push_back(std::move(j));
  }
  return {{"format", "rop-manifest"},
          {"version", DatasetManifest::kVersion},
          {"created_by", m.created_by},
          {"seed", m.seed},
          {"parameters", m.parameters},
          {"records", std::move(records)}};
}

DatasetManifest manifest_from_json(const ordered_json& doc) {
  try {
    if (doc.value("format", std::string{}) != "rop-manifest") throw Error("not a manifest document");
    if (doc.at("version").get<int>() != DatasetManifest::kVersion) {
      throw Error("unsupported manifest version " + doc.at("version").dump());
    }
    DatasetManifest m;
    m.created_by = doc.value("created_by", std::string{});
    m.seed = doc.at("seed").get<std::uint64_t>();
    m.parameters = doc.value("parameters", ordered_json::object());
    for (const auto& j : doc.at("records")) {
      SampleRecord r;
      r.id = j.at("id").get<std::string>();
      r.source_path = j.at("source_path").get<std::string>();
      const auto stage = stage_from_number(j.at("stage").get<long>());
      if (!stage) throw Error("record '" + r.id + "' has invalid stage");
      r.stage = *stage;
      const auto split = split_from_name(j.at("split").get<std::string>());
      if (!split) throw Error("record '" + r.id + "' has invalid split");
      r.split = *split;
      r.group_id = j.at("group_id").get<std::string>();
      r.is_augmented = j.at("is_augmented").get<bool>();
      r.source_width = j.value("source_width", 0);
      r.source_height = j.value("source_height", 0);
      if (auto a = j.find("augmentation"); a != j.end()) {
        Augmentation aug;
        const auto& c = a->at("crop");
        aug.crop = {c.at("top").get<double>(), c.at("bottom").get<double>(),
                    c.at("left").get<double>(), c.at("right").get<double>()};
        aug.zoom = a->at("zoom").get<double>();
        r.augmentation = aug;
      }
      for (const auto& p : j.at("polygons")) r.polygons.push_back(polygon_from(p));
      m.records.push_back(std::move(r));
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("invalid manifest: ") + e.what());
  }
}

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  out << manifest_to_json(manifest).dump(2) << '\n';
  if (!out) throw IoError("cannot write '" + path.string() + "'");
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  ordered_json doc;
  try {
    doc = ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("'" + path.string() + "': " + e.what(), e.byte);
  }
  return manifest_from_json(doc);
}

}  // namespace rop
