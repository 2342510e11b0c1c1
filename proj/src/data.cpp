#include "lesioncam/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "lesioncam/errors.hpp"
#include "lesioncam/layers.hpp"

namespace fs = std::filesystem;

namespace lesioncam {

LabelRecord LabelRecord::from_class(std::string id, int cls) {
    if (cls < 0 || cls > 2) throw UsageError("LabelRecord: class must be 0, 1 or 2");
    LabelRecord r;
    r.image_id = std::move(id);
    r.melanoma = cls == 0 ? 1 : 0;
    r.seborrheic_keratosis = cls == 1 ? 1 : 0;
    return r;
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(trim(field));
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
}

int parse_binary_flag(const std::string& s, int line_no) {
    if (s == "0" || s == "0.0") return 0;
    if (s == "1" || s == "1.0") return 1;
    throw FormatError("line " + std::to_string(line_no) + ": expected 0/1 flag, got '" + s +
                      "'");
}

}  // namespace

std::vector<LabelRecord> load_labels(const std::string& csv_path) {
    std::ifstream in(csv_path);
    if (!in) throw FormatError("cannot open label file '" + csv_path + "'");
    std::string line;
    if (!std::getline(in, line))
        throw FormatError("'" + csv_path + "': empty file, header expected");
    const auto header = split_csv_line(line);
    if (header.size() < 3 || header[0] != "image_id" || header[1] != "melanoma" ||
        header[2] != "seborrheic_keratosis")
        throw FormatError("'" + csv_path +
                          "': header must be image_id,melanoma,seborrheic_keratosis");

    std::vector<LabelRecord> records;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() < 3)
            throw FormatError("line " + std::to_string(line_no) + ": expected 3 fields, got " +
                              std::to_string(fields.size()));
        LabelRecord rec;
        rec.image_id = fields[0];
        rec.melanoma = parse_binary_flag(fields[1], line_no);
        rec.seborrheic_keratosis = parse_binary_flag(fields[2], line_no);
        if (rec.melanoma == 1 && rec.seborrheic_keratosis == 1)
            throw DataError("row '" + rec.image_id +
                            "': melanoma and seborrheic_keratosis both set");
        records.push_back(std::move(rec));
    }
    return records;
}

ClassCounts count_classes(const std::vector<LabelRecord>& records) {
    ClassCounts c;
    for (const auto& r : records) {
        switch (r.class_id()) {
            case 0: ++c.melanoma; break;
            case 1: ++c.seborrheic_keratosis; break;
            default: ++c.nevus; break;
        }
    }
    return c;
}

void save_manifest(const DatasetManifest& manifest, const std::string& csv_path) {
    std::ofstream out(csv_path);
    if (!out) throw FormatError("cannot open '" + csv_path + "' for writing");
    out << "image_path,melanoma,seborrheic_keratosis,bbox_x0,bbox_y0,bbox_x1,bbox_y1\n";
    for (const auto& e : manifest.entries) {
        out << e.image_path << "," << e.label.melanoma << "," << e.label.seborrheic_keratosis;
        if (e.true_bbox) {
            out << "," << e.true_bbox->x0 << "," << e.true_bbox->y0 << "," << e.true_bbox->x1
                << "," << e.true_bbox->y1;
        } else {
            out << ",,,,";
        }
        out << "\n";
    }
}

DatasetManifest load_manifest(const std::string& csv_path, bool check_paths) {
    std::ifstream in(csv_path);
    if (!in) throw FormatError("cannot open manifest '" + csv_path + "'");
    DatasetManifest manifest;
    manifest.root = fs::path(csv_path).parent_path().string();
    std::string line;
    if (!std::getline(in, line))
        throw FormatError("'" + csv_path + "': empty manifest, header expected");
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() < 3)
            throw FormatError("line " + std::to_string(line_no) +
                              ": expected at least 3 fields");
        ManifestEntry e;
        e.image_path = fields[0];
        e.label.image_id = fs::path(fields[0]).stem().string();
        e.label.melanoma = parse_binary_flag(fields[1], line_no);
        e.label.seborrheic_keratosis = parse_binary_flag(fields[2], line_no);
        if (e.label.melanoma == 1 && e.label.seborrheic_keratosis == 1)
            throw DataError("line " + std::to_string(line_no) + ": both class flags set");
        if (fields.size() >= 7 && !fields[3].empty()) {
            e.true_bbox = BBox{std::stoi(fields[3]), std::stoi(fields[4]),
                               std::stoi(fields[5]), std::stoi(fields[6])};
        }
        if (check_paths) {
            fs::path p(e.image_path);
            if (p.is_relative()) p = fs::path(manifest.root) / p;
            if (!fs::exists(p)) throw DataError("manifest image missing: " + p.string());
            e.image_path = p.string();
        }
        manifest.entries.push_back(std::move(e));
    }
    return manifest;
}

namespace {

struct Rng {
    std::mt19937 gen;
    explicit Rng(std::uint32_t seed) : gen(seed) {}
    double uniform() { return nn::uniform01(gen); }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    int uniform_int(int lo, int hi) {  // inclusive
        return lo + static_cast<int>(uniform() * (hi - lo + 1));
    }
};

struct BBoxTracker {
    int x0 = 1 << 30, y0 = 1 << 30, x1 = -1, y1 = -1;
    void add(int x, int y) {
        x0 = std::min(x0, x);
        y0 = std::min(y0, y);
        x1 = std::max(x1, x + 1);
        y1 = std::max(y1, y + 1);
    }
    BBox box() const { return {x0, y0, x1, y1}; }
};

void blend_pixel(RgbImage& img, int x, int y, const int rgb[3], double alpha) {
    if (x < 0 || x >= img.w || y < 0 || y >= img.h) return;
    for (int ch = 0; ch < 3; ++ch) {
        const double v = (1.0 - alpha) * img.at(x, y, ch) + alpha * rgb[ch];
        img.at(x, y, ch) = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
    }
}

// Soft-edged filled ellipse; tracks painted pixels where alpha passes 0.5.
void paint_ellipse(RgbImage& img, double cx, double cy, double rx, double ry,
                   const int rgb[3], BBoxTracker* track) {
    const int x_lo = std::max(0, static_cast<int>(cx - rx - 2));
    const int x_hi = std::min(img.w - 1, static_cast<int>(cx + rx + 2));
    const int y_lo = std::max(0, static_cast<int>(cy - ry - 2));
    const int y_hi = std::min(img.h - 1, static_cast<int>(cy + ry + 2));
    for (int y = y_lo; y <= y_hi; ++y)
        for (int x = x_lo; x <= x_hi; ++x) {
            const double dx = (x - cx) / rx, dy = (y - cy) / ry;
            const double d = std::sqrt(dx * dx + dy * dy);
            if (d > 1.0) continue;
            const double alpha = std::clamp((1.0 - d) * 2.0, 0.0, 1.0);
            blend_pixel(img, x, y, rgb, alpha);
            if (alpha >= 0.5 && track) track->add(x, y);
        }
}

void draw_hair_line(RgbImage& img, BinaryMask& mask, Rng& rng) {
    const int S = img.w;
    const double length = rng.uniform(0.4 * S, 0.9 * S);
    const double angle = rng.uniform(0.0, 3.14159265358979);
    const double cx = rng.uniform(0.15 * S, 0.85 * S);
    const double cy = rng.uniform(0.15 * S, 0.85 * S);
    const int width = rng.uniform_int(1, 2);
    const int dark[3] = {38, 30, 26};
    const double ux = std::cos(angle), uy = std::sin(angle);
    const int steps = static_cast<int>(length * 2.0);
    for (int s = 0; s <= steps; ++s) {
        const double t = (s / static_cast<double>(steps) - 0.5) * length;
        const double px = cx + t * ux, py = cy + t * uy;
        for (int dy = 0; dy < width; ++dy)
            for (int dx = 0; dx < width; ++dx) {
                const int x = static_cast<int>(px) + dx;
                const int y = static_cast<int>(py) + dy;
                if (x < 0 || x >= img.w || y < 0 || y >= img.h) continue;
                blend_pixel(img, x, y, dark, 1.0);
                mask.at(x, y) = 1;
            }
    }
}

SyntheticSample make_sample(int cls, int index, int size, double hair_density, Rng& rng) {
    SyntheticSample s;
    s.id = "synthetic_c" + std::to_string(cls) + "_" + std::to_string(index);
    s.class_id = cls;
    s.image = RgbImage(size, size);
    s.hair_mask = BinaryMask(size, size);

    // Skin-tone background with a gentle diagonal gradient and speckle.
    const double base_r = rng.uniform(195, 215);
    const double base_g = rng.uniform(155, 175);
    const double base_b = rng.uniform(130, 150);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            const double grad = 8.0 * (x + y) / (2.0 * size) - 4.0;
            const double noise = rng.uniform(-3.0, 3.0);
            const double vals[3] = {base_r + grad + noise, base_g + grad + noise,
                                    base_b + grad + noise};
            for (int ch = 0; ch < 3; ++ch)
                s.image.at(x, y, ch) = static_cast<std::uint8_t>(
                    std::lround(std::clamp(vals[ch], 0.0, 255.0)));
        }

    const double max_r = 0.24 * size;
    const double cx = rng.uniform(max_r + 2, size - max_r - 2);
    const double cy = rng.uniform(max_r + 2, size - max_r - 2);
    BBoxTracker track;
    if (cls == 0) {
        // Dark plateau with a wide soft rim. The flat core is broader than the
        // hair-detection structuring element and the rim ramp is gentle, so
        // line closings see neither the core nor the border as hair-narrow.
        const int dark[3] = {75, 52, 46};
        const double rx = rng.uniform(0.8, 0.95) * max_r;
        const double ry = rng.uniform(0.8, 0.95) * max_r;
        const int x_lo = std::max(0, static_cast<int>(cx - rx - 1));
        const int x_hi = std::min(size - 1, static_cast<int>(cx + rx + 1));
        const int y_lo = std::max(0, static_cast<int>(cy - ry - 1));
        const int y_hi = std::min(size - 1, static_cast<int>(cy + ry + 1));
        for (int y = y_lo; y <= y_hi; ++y)
            for (int x = x_lo; x <= x_hi; ++x) {
                const double dx = (x - cx) / rx, dy = (y - cy) / ry;
                const double d = std::sqrt(dx * dx + dy * dy);
                if (d > 1.0) continue;
                const double alpha = d <= 0.45 ? 1.0 : (1.0 - d) / 0.55;
                blend_pixel(s.image, x, y, dark, alpha);
                if (alpha >= 0.5) track.add(x, y);
            }
    } else if (cls == 1) {
        // Mid-tone plaque with stippled texture.
        const int plaque[3] = {172, 132, 100};
        const double rx = rng.uniform(0.8, 1.0) * max_r;
        const double ry = rng.uniform(0.8, 1.0) * max_r;
        paint_ellipse(s.image, cx, cy, rx, ry, plaque, &track);
        const int dot[3] = {92, 66, 52};
        const int dots = rng.uniform_int(10, 16);
        for (int d = 0; d < dots; ++d) {
            const double a = rng.uniform(0.0, 6.28318530717959);
            const double rad = std::sqrt(rng.uniform()) * 0.85;
            paint_ellipse(s.image, cx + rad * rx * std::cos(a), cy + rad * ry * std::sin(a),
                          1.3, 1.3, dot, nullptr);
        }
    } else {
        // Smooth round reddish-tan blob. The strong green-channel drop gives
        // this class its own positive color signature, so the classifier can
        // learn a dedicated detector instead of coding the class by the
        // absence of the other two signatures.
        const int tan[3] = {185, 100, 95};
        const double r = rng.uniform(0.75, 0.95) * max_r;
        paint_ellipse(s.image, cx, cy, r, r, tan, &track);
    }
    s.lesion_bbox = track.box();
    s.clean_image = s.image;

    if (hair_density > 0.0) {
        int count = static_cast<int>(hair_density);
        if (rng.uniform() < hair_density - count) ++count;
        for (int i = 0; i < count; ++i) draw_hair_line(s.image, s.hair_mask, rng);
    }
    return s;
}

}  // namespace

std::vector<SyntheticSample> generate_synthetic(const SyntheticSpec& spec) {
    if (spec.image_size < 16) throw UsageError("generate_synthetic: image_size too small");
    if (spec.per_class < 0) throw UsageError("generate_synthetic: per_class must be >= 0");
    Rng rng(spec.seed);
    std::vector<SyntheticSample> samples;
    samples.reserve(static_cast<std::size_t>(spec.per_class) * 3);
    for (int cls = 0; cls < 3; ++cls)
        for (int i = 0; i < spec.per_class; ++i)
            samples.push_back(make_sample(cls, i, spec.image_size, spec.hair_density, rng));
    return samples;
}

DatasetManifest materialize_synthetic(const std::vector<SyntheticSample>& samples,
                                      const std::string& dir) {
    fs::create_directories(dir);
    DatasetManifest manifest;
    manifest.root = dir;
    bool any_hair = false;
    for (const auto& s : samples)
        if (s.hair_mask.count() > 0) any_hair = true;
    if (any_hair) fs::create_directories(fs::path(dir) / "masks");

    // The CSV stores paths relative to its own directory so the dataset stays
    // relocatable; the returned manifest carries the joined paths.
    DatasetManifest on_disk = manifest;
    for (const auto& s : samples) {
        const std::string img_path = (fs::path(dir) / (s.id + ".png")).string();
        encode_image(s.image, img_path);
        if (any_hair)
            save_pgm(mask_to_gray(s.hair_mask),
                     (fs::path(dir) / "masks" / (s.id + "_hair.pgm")).string());
        ManifestEntry e;
        e.image_path = s.id + ".png";
        e.label = LabelRecord::from_class(s.id, s.class_id);
        e.true_bbox = s.lesion_bbox;
        on_disk.entries.push_back(e);
        e.image_path = img_path;
        manifest.entries.push_back(std::move(e));
    }
    save_manifest(on_disk, (fs::path(dir) / "manifest.csv").string());
    return manifest;
}

std::pair<DatasetManifest, DatasetManifest> split(const DatasetManifest& manifest,
                                                  double train_frac, std::uint32_t seed) {
    if (train_frac < 0.0 || train_frac > 1.0)
        throw UsageError("split: train_frac must be in [0,1]");
    std::vector<std::vector<int>> by_class(3);
    for (std::size_t i = 0; i < manifest.entries.size(); ++i)
        by_class[manifest.entries[i].label.class_id()].push_back(static_cast<int>(i));
    for (int cls = 0; cls < 3; ++cls)
        if (by_class[cls].empty())
            throw DataError("split: class " + std::to_string(cls) +
                            " has no samples, cannot stratify");

    std::mt19937 rng(seed);
    DatasetManifest train, val;
    train.root = val.root = manifest.root;
    for (int cls = 0; cls < 3; ++cls) {
        auto& idx = by_class[cls];
        std::shuffle(idx.begin(), idx.end(), rng);
        const auto n_train =
            static_cast<std::size_t>(std::llround(train_frac * idx.size()));
        for (std::size_t i = 0; i < idx.size(); ++i)
            (i < n_train ? train : val).entries.push_back(manifest.entries[idx[i]]);
    }
    return {std::move(train), std::move(val)};
}

Dataset load_dataset(const DatasetManifest& manifest, int input_size) {
    if (manifest.entries.empty()) throw UsageError("load_dataset: manifest is empty");
    Dataset ds;
    ds.images = Tensor4(static_cast<int>(manifest.entries.size()), 3, input_size, input_size);
    ds.labels.reserve(manifest.entries.size());
    const std::size_t img_elems = static_cast<std::size_t>(3) * input_size * input_size;
    for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
        const RgbImage img =
            resize_bilinear(decode_image(manifest.entries[i].image_path), input_size,
                            input_size);
        const Tensor4 t = to_tensor(img);
        std::copy(t.data.begin(), t.data.end(), ds.images.data.begin() + i * img_elems);
        ds.labels.push_back(manifest.entries[i].label.class_id());
    }
    return ds;
}

}  // namespace lesioncam
