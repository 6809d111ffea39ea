#include "morel/store.hpp"

#include <cstring>
#include <fstream>

namespace morel {

namespace {

constexpr char kMagic[4] = {'M', 'O', 'R', 'L'};
constexpr uint32_t kVersion = 1;
constexpr uint32_t kDtypeF64 = 1;
constexpr uint32_t kDtypeI32 = 2;

template <typename T>
void append_pod(std::vector<uint8_t>& out, const T& value) {
    const auto* p = reinterpret_cast<const uint8_t*>(&value);
    out.insert(out.end(), p, p + sizeof(T));
}

template <typename T>
void append_array(std::vector<uint8_t>& out, const std::vector<T>& values) {
    const auto* p = reinterpret_cast<const uint8_t*>(values.data());
    out.insert(out.end(), p, p + values.size() * sizeof(T));
}

class Cursor {
public:
    Cursor(const std::vector<uint8_t>& bytes, const std::string& context)
        : bytes_(bytes), context_(context) {}

    template <typename T>
    T read() {
        if (pos_ + sizeof(T) > bytes_.size()) throw CorruptRecord("truncated record: " + context_);
        T value;
        std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return value;
    }

    template <typename T>
    void read_array(std::vector<T>& out, size_t count) {
        const size_t bytes_needed = count * sizeof(T);
        if (pos_ + bytes_needed > bytes_.size())
            throw CorruptRecord("truncated record: " + context_);
        out.resize(count);
        std::memcpy(out.data(), bytes_.data() + pos_, bytes_needed);
        pos_ += bytes_needed;
    }

    std::string read_string(size_t len) {
        if (pos_ + len > bytes_.size()) throw CorruptRecord("truncated record: " + context_);
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), len);
        pos_ += len;
        return s;
    }

    size_t pos() const { return pos_; }

private:
    const std::vector<uint8_t>& bytes_;
    std::string context_;
    size_t pos_ = 0;
};

NamedSection make_f64(std::string name, std::vector<uint64_t> shape, std::vector<double> data) {
    NamedSection s;
    s.name = std::move(name);
    s.dtype = kDtypeF64;
    s.shape = std::move(shape);
    s.f64 = std::move(data);
    return s;
}

NamedSection make_i32(std::string name, std::vector<uint64_t> shape, std::vector<int32_t> data) {
    NamedSection s;
    s.name = std::move(name);
    s.dtype = kDtypeI32;
    s.shape = std::move(shape);
    s.i32 = std::move(data);
    return s;
}

NamedSection make_scalar_i32(std::string name, int32_t value) {
    return make_i32(std::move(name), {1}, {value});
}

NamedSection make_scalar_f64(std::string name, double value) {
    return make_f64(std::move(name), {1}, {value});
}

class SectionMap {
public:
    explicit SectionMap(const std::vector<NamedSection>& sections) {
        for (const auto& s : sections) map_[s.name] = &s;
    }

    const NamedSection& at(const std::string& name) const {
        auto it = map_.find(name);
        if (it == map_.end()) throw CorruptRecord("missing section: " + name);
        return *it->second;
    }
    bool has(const std::string& name) const { return map_.count(name) != 0; }

    int32_t scalar_i32(const std::string& name) const { return at(name).i32.at(0); }
    double scalar_f64(const std::string& name) const { return at(name).f64.at(0); }

private:
    std::map<std::string, const NamedSection*> map_;
};

}  // namespace

uint64_t fnv1a64(const uint8_t* data, size_t size) {
    uint64_t hash = 14695981039346656037ull;
    for (size_t i = 0; i < size; ++i) {
        hash ^= data[i];
        hash *= 1099511628211ull;
    }
    return hash;
}

std::vector<uint8_t> encode_sections(const std::vector<NamedSection>& sections) {
    std::vector<uint8_t> out;
    out.insert(out.end(), kMagic, kMagic + 4);
    append_pod(out, kVersion);
    append_pod(out, static_cast<uint32_t>(sections.size()));

    for (const auto& s : sections) {
        append_pod(out, static_cast<uint32_t>(s.name.size()));
        out.insert(out.end(), s.name.begin(), s.name.end());
        append_pod(out, s.dtype);
        append_pod(out, static_cast<uint32_t>(s.shape.size()));
        for (uint64_t d : s.shape) append_pod(out, d);
        const uint64_t count = s.element_count();
        if (s.dtype == kDtypeF64) {
            if (s.f64.size() != count) throw InvalidInput("section shape mismatch: " + s.name);
            append_array(out, s.f64);
        } else if (s.dtype == kDtypeI32) {
            if (s.i32.size() != count) throw InvalidInput("section shape mismatch: " + s.name);
            append_array(out, s.i32);
        } else {
            throw InvalidInput("unknown dtype in section " + s.name);
        }
    }

    append_pod(out, fnv1a64(out.data(), out.size()));
    return out;
}

std::vector<NamedSection> decode_sections(const std::vector<uint8_t>& bytes,
                                          const std::string& context) {
    if (bytes.size() < 4 + 4 + 4 + 8) throw CorruptRecord("record too short: " + context);

    uint64_t stored_checksum;
    std::memcpy(&stored_checksum, bytes.data() + bytes.size() - 8, 8);
    const uint64_t actual = fnv1a64(bytes.data(), bytes.size() - 8);
    if (stored_checksum != actual) throw CorruptRecord("checksum mismatch: " + context);

    Cursor cur(bytes, context);
    char magic[4];
    for (char& c : magic) c = static_cast<char>(cur.read<uint8_t>());
    if (std::memcmp(magic, kMagic, 4) != 0) throw CorruptRecord("bad magic: " + context);
    const uint32_t version = cur.read<uint32_t>();
    if (version != kVersion) throw CorruptRecord("unsupported format version: " + context);

    const uint32_t count = cur.read<uint32_t>();
    std::vector<NamedSection> sections(count);
    for (auto& s : sections) {
        const uint32_t name_len = cur.read<uint32_t>();
        s.name = cur.read_string(name_len);
        s.dtype = cur.read<uint32_t>();
        const uint32_t ndim = cur.read<uint32_t>();
        s.shape.resize(ndim);
        for (auto& d : s.shape) d = cur.read<uint64_t>();
        const uint64_t elements = s.element_count();
        if (s.dtype == kDtypeF64) {
            cur.read_array(s.f64, elements);
        } else if (s.dtype == kDtypeI32) {
            cur.read_array(s.i32, elements);
        } else {
            throw CorruptRecord("unknown dtype in " + context);
        }
    }
    if (cur.pos() != bytes.size() - 8) throw CorruptRecord("trailing bytes: " + context);
    return sections;
}

void write_section_file(const std::filesystem::path& path,
                        const std::vector<NamedSection>& sections) {
    const std::vector<uint8_t> bytes = encode_sections(sections);
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out.write(reinterpret_cast<const char*>(bytes.data()),
                  static_cast<std::streamsize>(bytes.size()));
        if (!out) throw Error("short write " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::vector<NamedSection> read_section_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw NotFound("no record at " + path.string());
    const auto size = in.tellg();
    in.seekg(0);
    std::vector<uint8_t> bytes(static_cast<size_t>(size));
    in.read(reinterpret_cast<char*>(bytes.data()), size);
    if (!in) throw CorruptRecord("read failure: " + path.string());
    return decode_sections(bytes, path.filename().string());
}

std::string BundleKey::file_name() const {
    if (global) return "gca.morl";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "kfa_%04d.morl", n);
    return buf;
}

std::vector<NamedSection> bundle_to_sections(const Bundle& bundle) {
    const AnchorSpace& sp = bundle.space;
    const uint64_t count = sp.anchor_count();
    const uint64_t fdim = sp.feature_dim;
    const uint64_t slots = sp.slots;

    std::vector<NamedSection> sections;
    sections.push_back(make_scalar_i32("meta.kind", sp.kind == SpaceKind::Global ? 0 : 1));
    sections.push_back(make_scalar_i32("meta.key_index", sp.key_index));
    sections.push_back(make_scalar_i32("meta.key_frame", sp.key_frame));
    sections.push_back(make_scalar_i32("meta.feature_dim", sp.feature_dim));
    sections.push_back(make_scalar_i32("meta.slots", sp.slots));
    sections.push_back(make_scalar_i32("meta.stage", bundle.meta.stage));
    sections.push_back(make_scalar_i32("meta.ifb_fw", bundle.meta.ifb_fw));
    sections.push_back(make_scalar_i32("meta.ifb_bw", bundle.meta.ifb_bw));
    sections.push_back(make_scalar_f64("meta.grid_voxel", sp.grid_voxel));
    sections.push_back(make_f64("meta.bbox", {4},
                                {sp.bbox_min.x, sp.bbox_min.y, sp.bbox_max.x, sp.bbox_max.y}));

    sections.push_back(make_f64("anchors.positions", {count, 2}, sp.positions));
    sections.push_back(make_f64("anchors.features", {count, fdim}, sp.features));
    sections.push_back(make_f64("anchors.log_scalings", {count, 2}, sp.log_scalings));
    sections.push_back(make_f64("anchors.offsets", {count, slots, 2}, sp.offsets));
    sections.push_back(make_i32("anchors.levels", {count}, sp.levels));
    sections.push_back(make_f64("anchors.blend_o_fw", {count}, sp.blend_o_fw));
    sections.push_back(make_f64("anchors.blend_d_fw", {count}, sp.blend_d_fw));
    sections.push_back(make_f64("anchors.blend_o_bw", {count}, sp.blend_o_bw));
    sections.push_back(make_f64("anchors.blend_d_bw", {count}, sp.blend_d_bw));
    sections.push_back(make_f64("anchors.accum_grad", {count}, sp.accum_grad));
    sections.push_back(make_i32("anchors.accum_count", {count}, sp.accum_count));
    sections.push_back(make_f64("anchors.opacity_stat", {count}, sp.opacity_stat));

    const DecoderWeights& dec = sp.decoder;
    sections.push_back(make_scalar_i32("decoder.hidden", dec.hidden));
    sections.push_back(make_f64("decoder.w1",
                                {static_cast<uint64_t>(dec.hidden),
                                 static_cast<uint64_t>(dec.in_dim())},
                                dec.w1));
    sections.push_back(make_f64("decoder.b1", {static_cast<uint64_t>(dec.hidden)}, dec.b1));
    sections.push_back(make_f64("decoder.w2",
                                {static_cast<uint64_t>(dec.out_dim()),
                                 static_cast<uint64_t>(dec.hidden)},
                                dec.w2));
    sections.push_back(make_f64("decoder.b2", {static_cast<uint64_t>(dec.out_dim())}, dec.b2));

    sections.push_back(make_scalar_i32("field.present", bundle.field ? 1 : 0));
    if (bundle.field) {
        const DeformationField& f = *bundle.field;
        const uint64_t res = f.grid_res, ch = f.channels;
        sections.push_back(make_scalar_i32("field.grid_res", f.grid_res));
        sections.push_back(make_scalar_i32("field.channels", f.channels));
        sections.push_back(make_scalar_i32("field.hidden", f.hidden));
        sections.push_back(make_scalar_i32("field.slots", f.slots));
        sections.push_back(make_scalar_i32("field.owner", f.owner_index));
        sections.push_back(make_f64("field.bbox", {4},
                                    {f.bbox_min.x, f.bbox_min.y, f.bbox_max.x, f.bbox_max.y}));
        sections.push_back(make_f64("field.grid_xy", {ch, res, res}, f.grid_xy));
        sections.push_back(make_f64("field.grid_xt", {ch, res, res}, f.grid_xt));
        sections.push_back(make_f64("field.grid_yt", {ch, res, res}, f.grid_yt));
        sections.push_back(make_f64("field.w1",
                                    {static_cast<uint64_t>(f.hidden), ch}, f.w1));
        sections.push_back(make_f64("field.b1", {static_cast<uint64_t>(f.hidden)}, f.b1));
        sections.push_back(make_f64("field.w2",
                                    {static_cast<uint64_t>(f.out_dim()),
                                     static_cast<uint64_t>(f.hidden)},
                                    f.w2));
        sections.push_back(make_f64("field.b2", {static_cast<uint64_t>(f.out_dim())}, f.b2));
    }
    return sections;
}

Bundle bundle_from_sections(const std::vector<NamedSection>& sections) {
    SectionMap map(sections);
    Bundle bundle;
    AnchorSpace& sp = bundle.space;

    sp.kind = map.scalar_i32("meta.kind") == 0 ? SpaceKind::Global : SpaceKind::Key;
    sp.key_index = map.scalar_i32("meta.key_index");
    sp.key_frame = map.scalar_i32("meta.key_frame");
    sp.feature_dim = map.scalar_i32("meta.feature_dim");
    sp.slots = map.scalar_i32("meta.slots");
    bundle.meta.stage = map.scalar_i32("meta.stage");
    bundle.meta.ifb_fw = map.scalar_i32("meta.ifb_fw");
    bundle.meta.ifb_bw = map.scalar_i32("meta.ifb_bw");
    sp.grid_voxel = map.scalar_f64("meta.grid_voxel");
    const auto& bbox = map.at("meta.bbox").f64;
    sp.bbox_min = {bbox[0], bbox[1]};
    sp.bbox_max = {bbox[2], bbox[3]};

    sp.positions = map.at("anchors.positions").f64;
    sp.features = map.at("anchors.features").f64;
    sp.log_scalings = map.at("anchors.log_scalings").f64;
    sp.offsets = map.at("anchors.offsets").f64;
    sp.levels = map.at("anchors.levels").i32;
    sp.blend_o_fw = map.at("anchors.blend_o_fw").f64;
    sp.blend_d_fw = map.at("anchors.blend_d_fw").f64;
    sp.blend_o_bw = map.at("anchors.blend_o_bw").f64;
    sp.blend_d_bw = map.at("anchors.blend_d_bw").f64;
    sp.accum_grad = map.at("anchors.accum_grad").f64;
    sp.accum_count = map.at("anchors.accum_count").i32;
    sp.opacity_stat = map.at("anchors.opacity_stat").f64;

    sp.decoder.feature_dim = sp.feature_dim;
    sp.decoder.slots = sp.slots;
    sp.decoder.hidden = map.scalar_i32("decoder.hidden");
    sp.decoder.w1 = map.at("decoder.w1").f64;
    sp.decoder.b1 = map.at("decoder.b1").f64;
    sp.decoder.w2 = map.at("decoder.w2").f64;
    sp.decoder.b2 = map.at("decoder.b2").f64;

    if (map.scalar_i32("field.present") != 0) {
        DeformationField f;
        f.grid_res = map.scalar_i32("field.grid_res");
        f.channels = map.scalar_i32("field.channels");
        f.hidden = map.scalar_i32("field.hidden");
        f.slots = map.scalar_i32("field.slots");
        f.owner_index = map.scalar_i32("field.owner");
        const auto& fb = map.at("field.bbox").f64;
        f.bbox_min = {fb[0], fb[1]};
        f.bbox_max = {fb[2], fb[3]};
        f.grid_xy = map.at("field.grid_xy").f64;
        f.grid_xt = map.at("field.grid_xt").f64;
        f.grid_yt = map.at("field.grid_yt").f64;
        f.w1 = map.at("field.w1").f64;
        f.b1 = map.at("field.b1").f64;
        f.w2 = map.at("field.w2").f64;
        f.b2 = map.at("field.b2").f64;
        bundle.field = std::move(f);
    }
    return bundle;
}

AnchorStore::AnchorStore(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
}

std::filesystem::path AnchorStore::path_for(const BundleKey& key) const {
    return dir_ / key.file_name();
}

std::filesystem::path AnchorStore::save(const BundleKey& key, const Bundle& bundle) {
    const auto path = path_for(key);
    write_section_file(path, bundle_to_sections(bundle));
    return path;
}

bool AnchorStore::is_loaded(const BundleKey& key) const {
    return resident_.count(key.label()) != 0;
}

bool AnchorStore::exists(const BundleKey& key) const {
    return std::filesystem::exists(path_for(key));
}

Bundle AnchorStore::load(const BundleKey& key) {
    if (is_loaded(key)) throw LedgerViolation("double load of " + key.label());
    Bundle bundle = bundle_from_sections(read_section_file(path_for(key)));
    resident_.insert(key.label());
    if (key.global) {
        global_count_ += 1;
        peak_global_ = std::max(peak_global_, global_count_);
    } else {
        key_count_ += 1;
        peak_key_ = std::max(peak_key_, key_count_);
    }
    events_.push_back({clock_, key.label(), true});
    return bundle;
}

void AnchorStore::unload(const BundleKey& key) {
    if (!is_loaded(key)) throw LedgerViolation("unload of non-resident " + key.label());
    resident_.erase(key.label());
    if (key.global)
        global_count_ -= 1;
    else
        key_count_ -= 1;
    events_.push_back({clock_, key.label(), false});
}

Bundle AnchorStore::peek(const BundleKey& key) const {
    return bundle_from_sections(read_section_file(path_for(key)));
}

ResidencyReport AnchorStore::residency_report() const {
    ResidencyReport report;
    report.resident.assign(resident_.begin(), resident_.end());
    report.key_count = key_count_;
    report.global_count = global_count_;
    report.peak_key = peak_key_;
    report.peak_global = peak_global_;
    for (const auto& e : events_) (e.load ? report.load_events : report.unload_events) += 1;
    report.events = events_;
    return report;
}

std::vector<StoreRecordInfo> AnchorStore::list_records() const {
    std::vector<StoreRecordInfo> records;
    auto add = [this, &records](const BundleKey& key) {
        const auto path = path_for(key);
        if (!std::filesystem::exists(path)) return;
        StoreRecordInfo info;
        info.key = key;
        info.byte_size = std::filesystem::file_size(path);
        std::ifstream in(path, std::ios::binary | std::ios::ate);
        const auto size = static_cast<size_t>(in.tellg());
        if (size >= 8) {
            in.seekg(static_cast<std::streamoff>(size - 8));
            in.read(reinterpret_cast<char*>(&info.checksum), 8);
        }
        records.push_back(info);
    };
    add(BundleKey{true, -1});
    for (int n = 0; n < 100000; ++n) {
        const BundleKey key{false, n};
        if (!exists(key)) break;
        add(key);
    }
    return records;
}

}  // namespace morel
