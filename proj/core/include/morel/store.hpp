#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "morel/deformation.hpp"
#include "morel/scene_model.hpp"

namespace morel {

// ---------------------------------------------------------------------------
// Named-section container format. Little-endian: magic "MORL", version u32,
// section count u32, then per section (name length u32, name, dtype u32,
// ndim u32, dims u64..., raw data), with a trailing 64-bit FNV-1a checksum
// over everything before it. dtype 1 = f64, 2 = i32.
// ---------------------------------------------------------------------------

struct NamedSection {
    std::string name;
    uint32_t dtype = 1;
    std::vector<uint64_t> shape;
    std::vector<double> f64;
    std::vector<int32_t> i32;

    uint64_t element_count() const {
        uint64_t n = 1;
        for (uint64_t d : shape) n *= d;
        return shape.empty() ? 0 : n;
    }
};

uint64_t fnv1a64(const uint8_t* data, size_t size);

std::vector<uint8_t> encode_sections(const std::vector<NamedSection>& sections);
std::vector<NamedSection> decode_sections(const std::vector<uint8_t>& bytes,
                                          const std::string& context);

void write_section_file(const std::filesystem::path& path,
                        const std::vector<NamedSection>& sections);
std::vector<NamedSection> read_section_file(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Bundles: one record per anchor space, carrying its deformation field and
// blend parameters when present.
// ---------------------------------------------------------------------------

struct BundleKey {
    bool global = false;
    int n = -1;

    std::string file_name() const;
    std::string label() const { return global ? "gca" : "kfa_" + std::to_string(n); }
    bool operator<(const BundleKey& o) const {
        return std::tie(global, n) < std::tie(o.global, o.n);
    }
    bool operator==(const BundleKey& o) const { return global == o.global && n == o.n; }
};

// Stage progress markers used for per-stage resume.
struct BundleMeta {
    int stage = 0;  // 0 = KfA/GCA trained, 1 = PWD trained
    int ifb_fw = 0;
    int ifb_bw = 0;
};

struct Bundle {
    AnchorSpace space;
    std::optional<DeformationField> field;
    BundleMeta meta;
};

std::vector<NamedSection> bundle_to_sections(const Bundle& bundle);
Bundle bundle_from_sections(const std::vector<NamedSection>& sections);

// ---------------------------------------------------------------------------
// Residency ledger: every load/unload is logged; peak counts are tracked
// separately for the Global space and Key spaces.
// ---------------------------------------------------------------------------

struct LedgerEvent {
    int64_t clock = -1;
    std::string key;
    bool load = false;
};

struct ResidencyReport {
    std::vector<std::string> resident;
    int key_count = 0;
    int global_count = 0;
    int peak_key = 0;
    int peak_global = 0;
    size_t load_events = 0;
    size_t unload_events = 0;
    std::vector<LedgerEvent> events;
};

struct StoreRecordInfo {
    BundleKey key;
    uint64_t byte_size = 0;
    uint64_t checksum = 0;
};

// On-disk registry with explicit load/unload accounting. Loads verify the
// trailing checksum; double-loads and unloads without a prior load throw
// LedgerViolation.
class AnchorStore {
public:
    explicit AnchorStore(std::filesystem::path dir);

    const std::filesystem::path& dir() const { return dir_; }

    std::filesystem::path save(const BundleKey& key, const Bundle& bundle);
    Bundle load(const BundleKey& key);
    void unload(const BundleKey& key);
    bool is_loaded(const BundleKey& key) const;
    bool exists(const BundleKey& key) const;

    // Read without touching the ledger (inspection only).
    Bundle peek(const BundleKey& key) const;

    ResidencyReport residency_report() const;
    std::vector<StoreRecordInfo> list_records() const;

    // Caller-provided clock (training step or frame index) recorded with
    // each ledger event.
    void set_clock(int64_t clock) { clock_ = clock; }

private:
    std::filesystem::path path_for(const BundleKey& key) const;

    std::filesystem::path dir_;
    std::set<std::string> resident_;
    int key_count_ = 0;
    int global_count_ = 0;
    int peak_key_ = 0;
    int peak_global_ = 0;
    std::vector<LedgerEvent> events_;
    int64_t clock_ = -1;
};

}  // namespace morel
