#include "edgegs/io.hpp"

#include "json.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

namespace edgegs {

using nlohmann::json;

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot open " + path.string() + " for writing");
    }
    out << text;
    if (!out) {
        throw DataError("failed writing " + path.string());
    }
}

namespace {

json parse_json_file(const fs::path& path) {
    const std::string text = read_text_file(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw DataError(path.string() + ": invalid JSON: " + e.what());
    }
}

void check_format(const json& doc, const char* format, int version, const fs::path& path) {
    if (!doc.is_object() || !doc.contains("format") || !doc.contains("version")) {
        throw DataError(path.string() + ": missing format/version tag");
    }
    if (doc["format"] != format) {
        throw DataError(path.string() + ": expected format '" + format + "', found " +
                        doc["format"].dump());
    }
    if (!doc["version"].is_number_integer() || doc["version"].get<int>() != version) {
        throw DataError(path.string() + ": unsupported " + format + " version " +
                        doc["version"].dump());
    }
}

json vec_json(const Vec3& v) {
    return json::array({v.x(), v.y(), v.z()});
}

Vec3 json_vec(const json& j) {
    if (!j.is_array() || j.size() != 3) {
        throw DataError("expected a 3-element coordinate array, found " + j.dump());
    }
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json edge_json(const ParametricEdge& edge) {
    json e;
    if (const auto* line = std::get_if<LineSegment>(&edge)) {
        e["type"] = "line";
        e["points"] = json::array({vec_json(line->p0), vec_json(line->p1)});
    } else {
        const auto& c = std::get<CubicBezier>(edge);
        e["type"] = "bezier";
        e["points"] = json::array();
        for (const Vec3& p : c.control) {
            e["points"].push_back(vec_json(p));
        }
    }
    return e;
}

ParametricEdge json_edge(const json& e, std::size_t index) {
    try {
        const std::string type = e.at("type").get<std::string>();
        const json& pts = e.at("points");
        if (type == "line") {
            if (pts.size() != 2) {
                throw DataError("a line needs 2 points");
            }
            return LineSegment{json_vec(pts[0]), json_vec(pts[1])};
        }
        if (type == "bezier") {
            if (pts.size() != 4) {
                throw DataError("a bezier needs 4 points");
            }
            CubicBezier c;
            for (std::size_t i = 0; i < 4; ++i) {
                c.control[i] = json_vec(pts[i]);
            }
            return c;
        }
        throw DataError("unknown edge type '" + type + "'");
    } catch (const json::exception& ex) {
        throw DataError("edge " + std::to_string(index) + ": " + ex.what());
    } catch (const DataError& ex) {
        throw DataError("edge " + std::to_string(index) + ": " + ex.what());
    }
}

// --- binary helpers -------------------------------------------------------

class ByteWriter {
public:
    template <typename T>
    void put(const T& v) {
        static_assert(std::is_trivially_copyable_v<T>);
        const auto* p = reinterpret_cast<const char*>(&v);
        bytes_.append(p, sizeof(T));
    }
    std::string take() { return std::move(bytes_); }

private:
    std::string bytes_;
};

class ByteReader {
public:
    explicit ByteReader(const std::string& bytes) : bytes_(bytes) {}
    template <typename T>
    T get() {
        if (pos_ + sizeof(T) > bytes_.size()) {
            throw DataError("checkpoint is truncated");
        }
        T v;
        std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    bool done() const { return pos_ == bytes_.size(); }

private:
    const std::string& bytes_;
    std::size_t pos_ = 0;
};

constexpr std::array<char, 8> kCheckpointMagic{'E', 'D', 'G', 'E', 'G', 'S', 'C', 'K'};

// --- PLY ------------------------------------------------------------------

struct PlyVertexTable {
    std::vector<std::string> properties;
    std::vector<std::vector<double>> rows;
};

PlyVertexTable read_ascii_ply_vertices(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open " + path.string());
    }
    std::string line;
    if (!std::getline(in, line) || line.rfind("ply", 0) != 0) {
        throw DataError(path.string() + ": not a PLY file");
    }
    PlyVertexTable table;
    std::size_t vertex_count = 0;
    bool in_vertex = false;
    bool vertex_first = true;
    bool seen_element = false;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string word;
        ls >> word;
        if (word == "format") {
            std::string fmt;
            ls >> fmt;
            if (fmt != "ascii") {
                throw DataError(path.string() + ": only ASCII PLY is supported");
            }
        } else if (word == "element") {
            std::string name;
            std::size_t count = 0;
            ls >> name >> count;
            in_vertex = name == "vertex";
            if (in_vertex) {
                vertex_count = count;
                vertex_first = !seen_element;
            }
            seen_element = true;
        } else if (word == "property" && in_vertex) {
            std::string type;
            std::string name;
            ls >> type;
            if (type == "list") {
                throw DataError(path.string() + ": list properties on vertices are unsupported");
            }
            ls >> name;
            table.properties.push_back(name);
        } else if (word == "end_header") {
            break;
        }
    }
    if (!vertex_first) {
        throw DataError(path.string() + ": the vertex element must come first");
    }
    table.rows.reserve(vertex_count);
    for (std::size_t i = 0; i < vertex_count; ++i) {
        if (!std::getline(in, line)) {
            throw DataError(path.string() + ": expected " + std::to_string(vertex_count) +
                            " vertices, found " + std::to_string(i));
        }
        std::istringstream ls(line);
        std::vector<double> row(table.properties.size());
        for (double& v : row) {
            if (!(ls >> v)) {
                throw DataError(path.string() + ": malformed vertex line " + std::to_string(i));
            }
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

std::size_t property_index(const PlyVertexTable& t, const std::string& name,
                           const fs::path& path) {
    const auto it = std::find(t.properties.begin(), t.properties.end(), name);
    if (it == t.properties.end()) {
        throw DataError(path.string() + ": missing vertex property '" + name + "'");
    }
    return static_cast<std::size_t>(it - t.properties.begin());
}

// --- config ---------------------------------------------------------------

using ConfigSetter = std::function<void(TrainConfig&, const std::string&)>;

template <typename T>
T parse_value(const std::string& key, const std::string& value) {
    std::istringstream ss(value);
    T out{};
    ss >> out;
    std::string rest;
    if (ss.fail() || (ss >> rest)) {
        throw DataError("config key '" + key + "': cannot parse '" + value + "'");
    }
    return out;
}

template <typename T>
ConfigSetter setter(T TrainConfig::*member) {
    return [member](TrainConfig& c, const std::string& v) {
        c.*member = parse_value<T>("", v);
    };
}

const std::map<std::string, ConfigSetter>& config_setters() {
    static const std::map<std::string, ConfigSetter> table = {
        {"epochs", setter(&TrainConfig::epochs)},
        {"position_only_epochs", setter(&TrainConfig::position_only_epochs)},
        {"regularizer_start_epoch", setter(&TrainConfig::regularizer_start_epoch)},
        {"regularizer_every", setter(&TrainConfig::regularizer_every)},
        {"lambda_orient", setter(&TrainConfig::lambda_orient)},
        {"lambda_shape", setter(&TrainConfig::lambda_shape)},
        {"k", setter(&TrainConfig::k)},
        {"edge_threshold", setter(&TrainConfig::edge_threshold)},
        {"adam_beta1", setter(&TrainConfig::adam_beta1)},
        {"adam_beta2", setter(&TrainConfig::adam_beta2)},
        {"adam_epsilon", setter(&TrainConfig::adam_epsilon)},
        {"seed", setter(&TrainConfig::seed)},
        {"lr_position", [](TrainConfig& c, const std::string& v) {
             c.lr.position = parse_value<double>("lr_position", v);
         }},
        {"lr_position_decay", [](TrainConfig& c, const std::string& v) {
             c.lr.position_decay = parse_value<double>("lr_position_decay", v);
         }},
        {"lr_position_decay_every", [](TrainConfig& c, const std::string& v) {
             c.lr.position_decay_every = parse_value<int>("lr_position_decay_every", v);
         }},
        {"lr_position_decay_count", [](TrainConfig& c, const std::string& v) {
             c.lr.position_decay_count = parse_value<int>("lr_position_decay_count", v);
         }},
        {"lr_scale", [](TrainConfig& c, const std::string& v) {
             c.lr.scale = parse_value<double>("lr_scale", v);
         }},
        {"lr_opacity", [](TrainConfig& c, const std::string& v) {
             c.lr.opacity = parse_value<double>("lr_opacity", v);
         }},
        {"lr_rotation", [](TrainConfig& c, const std::string& v) {
             c.lr.rotation = parse_value<double>("lr_rotation", v);
         }},
        {"cull_opacity", [](TrainConfig& c, const std::string& v) {
             c.density.cull_opacity = parse_value<double>("cull_opacity", v);
         }},
        {"densify_grad_threshold", [](TrainConfig& c, const std::string& v) {
             c.density.densify_grad_threshold = parse_value<double>("densify_grad_threshold", v);
         }},
        {"densify_every", [](TrainConfig& c, const std::string& v) {
             c.density.densify_every = parse_value<int>("densify_every", v);
         }},
        {"densify_stop_epoch", [](TrainConfig& c, const std::string& v) {
             c.density.densify_stop_epoch = parse_value<int>("densify_stop_epoch", v);
         }},
        {"clone_scale_divisor", [](TrainConfig& c, const std::string& v) {
             c.density.clone_scale_divisor = parse_value<double>("clone_scale_divisor", v);
         }},
    };
    return table;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

} // namespace

// --- dataset --------------------------------------------------------------

Dataset load_dataset(const fs::path& root) {
    if (!fs::is_directory(root)) {
        throw DataError("dataset directory " + root.string() + " does not exist");
    }
    const fs::path cameras_path = root / "cameras.json";
    const json doc = parse_json_file(cameras_path);
    check_format(doc, kCamerasFormat, kCamerasVersion, cameras_path);

    Dataset data;
    if (doc.contains("bbox")) {
        try {
            data.bbox_min = json_vec(doc["bbox"].at("min"));
            data.bbox_max = json_vec(doc["bbox"].at("max"));
        } catch (const std::exception& e) {
            throw DataError(cameras_path.string() + ": invalid bbox: " + e.what());
        }
    }
    if (!doc.contains("views") || !doc["views"].is_array()) {
        throw DataError(cameras_path.string() + ": missing 'views' array");
    }

    std::set<fs::path> referenced;
    std::size_t index = 0;
    for (const json& v : doc["views"]) {
        const std::string label = v.contains("name") && v["name"].is_string()
                                      ? v["name"].get<std::string>()
                                      : "#" + std::to_string(index);
        auto fail = [&](const std::string& what) -> DataError {
            return DataError(cameras_path.string() + ": view '" + label + "': " + what);
        };
        CameraView cam;
        fs::path image_rel;
        try {
            cam.fx = v.at("fx").get<double>();
            cam.fy = v.at("fy").get<double>();
            cam.cx = v.at("cx").get<double>();
            cam.cy = v.at("cy").get<double>();
            cam.width = v.at("width").get<int>();
            cam.height = v.at("height").get<int>();
            image_rel = v.at("image").get<std::string>();
            const json& m = v.at("world_to_camera");
            if (!m.is_array() || m.size() != 16) {
                throw fail("world_to_camera must have 16 entries");
            }
            for (int r = 0; r < 3; ++r) {
                for (int c = 0; c < 3; ++c) {
                    cam.world_to_cam.rotation(r, c) = m[static_cast<std::size_t>(4 * r + c)].get<double>();
                }
                cam.world_to_cam.translation[r] = m[static_cast<std::size_t>(4 * r + 3)].get<double>();
            }
            const std::array<double, 4> last{m[12].get<double>(), m[13].get<double>(),
                                             m[14].get<double>(), m[15].get<double>()};
            if (last != std::array<double, 4>{0.0, 0.0, 0.0, 1.0}) {
                throw fail("last row of world_to_camera must be 0 0 0 1");
            }
        } catch (const json::exception& e) {
            throw fail(e.what());
        }
        const Mat3& r = cam.world_to_cam.rotation;
        if ((r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-4 ||
            std::abs(r.determinant() - 1.0) > 1e-4) {
            throw fail("rotation is not orthonormal");
        }
        try {
            cam.target = read_image(root / image_rel);
            cam.validate();
        } catch (const DataError& e) {
            throw fail(e.what());
        }
        if (!data.views.empty() && (cam.width != data.views.front().width ||
                                    cam.height != data.views.front().height)) {
            throw fail("image dimensions differ from the first view");
        }
        referenced.insert(fs::weakly_canonical(root / image_rel));
        data.names.push_back(label);
        data.views.push_back(std::move(cam));
        ++index;
    }
    if (data.views.empty()) {
        throw DataError(cameras_path.string() + ": no views");
    }
    const fs::path image_dir = root / "images";
    if (fs::is_directory(image_dir)) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(image_dir)) {
            files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            const auto ext = f.extension().string();
            if ((ext == ".pgm" || ext == ".png") && !referenced.count(fs::weakly_canonical(f))) {
                throw DataError("image " + f.string() + " has no camera entry");
            }
        }
    }
    if (fs::exists(root / "init_points.ply")) {
        data.init_points = read_ply_points(root / "init_points.ply");
    }
    if (fs::exists(root / "gt_edges.json")) {
        data.gt_edges = read_edges_json(root / "gt_edges.json");
    }
    return data;
}

void save_dataset(const fs::path& root, const std::vector<CameraView>& views,
                  const Vec3& bbox_min, const Vec3& bbox_max,
                  const std::vector<ParametricEdge>* gt_edges, const std::string& image_ext) {
    fs::create_directories(root / "images");
    json doc;
    doc["format"] = kCamerasFormat;
    doc["version"] = kCamerasVersion;
    doc["bbox"] = {{"min", vec_json(bbox_min)}, {"max", vec_json(bbox_max)}};
    doc["views"] = json::array();
    for (std::size_t i = 0; i < views.size(); ++i) {
        const CameraView& cam = views[i];
        std::ostringstream name;
        name << "view_" << std::setw(3) << std::setfill('0') << i;
        const std::string rel = "images/" + name.str() + "." + image_ext;
        write_image(root / rel, cam.target);
        json m = json::array();
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) {
                m.push_back(cam.world_to_cam.rotation(r, c));
            }
            m.push_back(cam.world_to_cam.translation[r]);
        }
        for (const double x : {0.0, 0.0, 0.0, 1.0}) {
            m.push_back(x);
        }
        doc["views"].push_back({{"name", name.str()},
                                {"image", rel},
                                {"width", cam.width},
                                {"height", cam.height},
                                {"fx", cam.fx},
                                {"fy", cam.fy},
                                {"cx", cam.cx},
                                {"cy", cam.cy},
                                {"world_to_camera", m}});
    }
    write_text_file(root / "cameras.json", doc.dump(2) + "\n");
    if (gt_edges != nullptr) {
        write_edges_json(root / "gt_edges.json", *gt_edges);
    }
}

// --- edges ----------------------------------------------------------------

void write_edges_json(const fs::path& path, const std::vector<ParametricEdge>& edges) {
    json doc;
    doc["format"] = kEdgesFormat;
    doc["version"] = kEdgesVersion;
    doc["edges"] = json::array();
    for (const auto& e : edges) {
        doc["edges"].push_back(edge_json(e));
    }
    write_text_file(path, doc.dump(2) + "\n");
}

std::vector<ParametricEdge> read_edges_json(const fs::path& path) {
    const json doc = parse_json_file(path);
    check_format(doc, kEdgesFormat, kEdgesVersion, path);
    if (!doc.contains("edges") || !doc["edges"].is_array()) {
        throw DataError(path.string() + ": missing 'edges' array");
    }
    std::vector<ParametricEdge> edges;
    std::size_t i = 0;
    for (const json& e : doc["edges"]) {
        try {
            edges.push_back(json_edge(e, i++));
        } catch (const DataError& ex) {
            throw DataError(path.string() + ": " + ex.what());
        }
    }
    return edges;
}

// --- PLY ------------------------------------------------------------------

void write_oriented_ply(const fs::path& path, const std::vector<OrientedPoint>& points) {
    std::ostringstream out;
    out << "ply\nformat ascii 1.0\ncomment edgegs oriented edge points\n"
        << "element vertex " << points.size() << "\n"
        << "property double x\nproperty double y\nproperty double z\n"
        << "property double nx\nproperty double ny\nproperty double nz\nend_header\n";
    out << std::setprecision(17);
    for (const auto& p : points) {
        out << p.position.x() << ' ' << p.position.y() << ' ' << p.position.z() << ' '
            << p.direction.x() << ' ' << p.direction.y() << ' ' << p.direction.z() << '\n';
    }
    write_text_file(path, out.str());
}

std::vector<OrientedPoint> read_oriented_ply(const fs::path& path) {
    const PlyVertexTable t = read_ascii_ply_vertices(path);
    std::array<std::size_t, 6> idx{};
    const std::array<const char*, 6> names{"x", "y", "z", "nx", "ny", "nz"};
    for (std::size_t i = 0; i < 6; ++i) {
        idx[i] = property_index(t, names[i], path);
    }
    std::vector<OrientedPoint> points;
    points.reserve(t.rows.size());
    for (const auto& row : t.rows) {
        OrientedPoint p;
        p.position = Vec3(row[idx[0]], row[idx[1]], row[idx[2]]);
        p.direction = Vec3(row[idx[3]], row[idx[4]], row[idx[5]]);
        const double n = p.direction.norm();
        if (!(n > 0.0)) {
            throw DataError(path.string() + ": zero direction vector");
        }
        if (std::abs(n - 1.0) > 1e-12) {
            p.direction /= n;
        }
        points.push_back(p);
    }
    return points;
}

std::vector<Vec3> read_ply_points(const fs::path& path) {
    const PlyVertexTable t = read_ascii_ply_vertices(path);
    const std::size_t ix = property_index(t, "x", path);
    const std::size_t iy = property_index(t, "y", path);
    const std::size_t iz = property_index(t, "z", path);
    std::vector<Vec3> points;
    points.reserve(t.rows.size());
    for (const auto& row : t.rows) {
        points.emplace_back(row[ix], row[iy], row[iz]);
    }
    return points;
}

// --- checkpoint -----------------------------------------------------------

std::string encode_checkpoint(const TrainState& state) {
    const std::size_t n = state.cloud.size();
    if (state.adam_m.size() != n * kParamsPerGaussian ||
        state.adam_v.size() != n * kParamsPerGaussian || state.grad2d_sum.size() != n ||
        state.grad2d_count.size() != n) {
        throw ContractError("encode_checkpoint: optimizer state does not match the cloud");
    }
    ByteWriter w;
    for (const char c : kCheckpointMagic) {
        w.put(c);
    }
    w.put<std::uint32_t>(kCheckpointVersion);
    w.put<std::uint32_t>(0);
    w.put<std::int64_t>(state.epoch);
    w.put<std::uint64_t>(state.step);
    w.put<std::uint64_t>(state.appearance_step);
    w.put(state.lr_position);
    w.put(state.lr_rotation);
    w.put(state.lr_scale);
    w.put(state.lr_opacity);
    w.put<std::uint64_t>(n);
    for (const auto& g : state.cloud) {
        for (int j = 0; j < 3; ++j) {
            w.put(g.mean[j]);
        }
        for (int j = 0; j < 4; ++j) {
            w.put(g.rotation[j]);
        }
        for (int j = 0; j < 3; ++j) {
            w.put(g.log_scale[j]);
        }
        w.put(g.opacity_raw);
    }
    for (const double v : state.adam_m) {
        w.put(v);
    }
    for (const double v : state.adam_v) {
        w.put(v);
    }
    for (const double v : state.grad2d_sum) {
        w.put(v);
    }
    for (const std::uint32_t v : state.grad2d_count) {
        w.put(v);
    }
    return w.take();
}

TrainState decode_checkpoint(const std::string& bytes) {
    ByteReader r(bytes);
    for (const char c : kCheckpointMagic) {
        if (r.get<char>() != c) {
            throw DataError("not an edgegs checkpoint (bad magic)");
        }
    }
    const auto version = r.get<std::uint32_t>();
    if (version != static_cast<std::uint32_t>(kCheckpointVersion)) {
        throw DataError("unsupported checkpoint version " + std::to_string(version));
    }
    r.get<std::uint32_t>();
    TrainState s;
    s.epoch = static_cast<int>(r.get<std::int64_t>());
    s.step = r.get<std::uint64_t>();
    s.appearance_step = r.get<std::uint64_t>();
    s.lr_position = r.get<double>();
    s.lr_rotation = r.get<double>();
    s.lr_scale = r.get<double>();
    s.lr_opacity = r.get<double>();
    const auto n = r.get<std::uint64_t>();
    if (n > bytes.size()) {
        throw DataError("checkpoint declares an impossible Gaussian count");
    }
    s.cloud.resize(n);
    for (auto& g : s.cloud) {
        for (int j = 0; j < 3; ++j) {
            g.mean[j] = r.get<double>();
        }
        for (int j = 0; j < 4; ++j) {
            g.rotation[j] = r.get<double>();
        }
        for (int j = 0; j < 3; ++j) {
            g.log_scale[j] = r.get<double>();
        }
        g.opacity_raw = r.get<double>();
    }
    s.adam_m.resize(n * kParamsPerGaussian);
    s.adam_v.resize(n * kParamsPerGaussian);
    for (double& v : s.adam_m) {
        v = r.get<double>();
    }
    for (double& v : s.adam_v) {
        v = r.get<double>();
    }
    s.grad2d_sum.resize(n);
    s.grad2d_count.resize(n);
    for (double& v : s.grad2d_sum) {
        v = r.get<double>();
    }
    for (std::uint32_t& v : s.grad2d_count) {
        v = r.get<std::uint32_t>();
    }
    if (!r.done()) {
        throw DataError("checkpoint has trailing bytes");
    }
    return s;
}

void write_checkpoint(const fs::path& path, const TrainState& state) {
    write_text_file(path, encode_checkpoint(state));
}

TrainState read_checkpoint(const fs::path& path) {
    try {
        return decode_checkpoint(read_text_file(path));
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

// --- config ---------------------------------------------------------------

TrainConfig parse_train_config(const std::string& text, TrainConfig base) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    const auto& setters = config_setters();
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw DataError("config line " + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto it = setters.find(key);
        if (it == setters.end()) {
            throw DataError("config line " + std::to_string(lineno) + ": unknown key '" + key +
                            "'");
        }
        try {
            it->second(base, value);
        } catch (const DataError&) {
            throw DataError("config line " + std::to_string(lineno) + ": invalid value '" +
                            value + "' for " + key);
        }
    }
    return base;
}

TrainConfig read_train_config(const fs::path& path, TrainConfig base) {
    try {
        return parse_train_config(read_text_file(path), std::move(base));
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

std::string format_train_config(const TrainConfig& c) {
    std::ostringstream o;
    o << std::setprecision(17);
    o << "epochs = " << c.epochs << '\n'
      << "position_only_epochs = " << c.position_only_epochs << '\n'
      << "regularizer_start_epoch = " << c.regularizer_start_epoch << '\n'
      << "regularizer_every = " << c.regularizer_every << '\n'
      << "lambda_orient = " << c.lambda_orient << '\n'
      << "lambda_shape = " << c.lambda_shape << '\n'
      << "k = " << c.k << '\n'
      << "edge_threshold = " << c.edge_threshold << '\n'
      << "lr_position = " << c.lr.position << '\n'
      << "lr_position_decay = " << c.lr.position_decay << '\n'
      << "lr_position_decay_every = " << c.lr.position_decay_every << '\n'
      << "lr_position_decay_count = " << c.lr.position_decay_count << '\n'
      << "lr_scale = " << c.lr.scale << '\n'
      << "lr_opacity = " << c.lr.opacity << '\n'
      << "lr_rotation = " << c.lr.rotation << '\n'
      << "cull_opacity = " << c.density.cull_opacity << '\n'
      << "densify_grad_threshold = " << c.density.densify_grad_threshold << '\n'
      << "densify_every = " << c.density.densify_every << '\n'
      << "densify_stop_epoch = " << c.density.densify_stop_epoch << '\n'
      << "clone_scale_divisor = " << c.density.clone_scale_divisor << '\n'
      << "adam_beta1 = " << c.adam_beta1 << '\n'
      << "adam_beta2 = " << c.adam_beta2 << '\n'
      << "adam_epsilon = " << c.adam_epsilon << '\n'
      << "seed = " << c.seed << '\n';
    return o.str();
}

// --- metrics / reports ----------------------------------------------------

void write_metrics_json(const fs::path& path, const MetricReport& r) {
    json doc;
    doc["format"] = kMetricsFormat;
    doc["version"] = kMetricsVersion;
    doc["accuracy"] = r.accuracy;
    doc["completeness"] = r.completeness;
    doc["spacing"] = r.spacing;
    doc["scale"] = r.scale;
    doc["pred_edges"] = r.pred_edges;
    doc["gt_edges"] = r.gt_edges;
    doc["pred_points"] = r.pred_points;
    doc["gt_points"] = r.gt_points;
    doc["thresholds"] = json::array();
    for (std::size_t i = 0; i < r.thresholds.size(); ++i) {
        doc["thresholds"].push_back({{"tau", r.thresholds[i]},
                                     {"precision", r.scores[i].precision},
                                     {"recall", r.scores[i].recall},
                                     {"fscore", r.scores[i].fscore}});
    }
    write_text_file(path, doc.dump(2) + "\n");
}

MetricReport read_metrics_json(const fs::path& path) {
    const json doc = parse_json_file(path);
    check_format(doc, kMetricsFormat, kMetricsVersion, path);
    MetricReport r;
    try {
        r.accuracy = doc.at("accuracy").get<double>();
        r.completeness = doc.at("completeness").get<double>();
        r.spacing = doc.at("spacing").get<double>();
        r.scale = doc.at("scale").get<double>();
        r.pred_edges = doc.at("pred_edges").get<std::size_t>();
        r.gt_edges = doc.at("gt_edges").get<std::size_t>();
        r.pred_points = doc.at("pred_points").get<std::size_t>();
        r.gt_points = doc.at("gt_points").get<std::size_t>();
        for (const json& t : doc.at("thresholds")) {
            r.thresholds.push_back(t.at("tau").get<double>());
            r.scores.push_back({t.at("precision").get<double>(), t.at("recall").get<double>(),
                                t.at("fscore").get<double>()});
        }
    } catch (const json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    return r;
}

void write_train_report_json(const fs::path& path, const TrainReport& report,
                             const TrainConfig& cfg) {
    json doc;
    doc["format"] = "edgegs-train-report";
    doc["version"] = 1;
    doc["seed"] = cfg.seed;
    doc["epochs"] = json::array();
    for (std::size_t e = 0; e < report.epochs.size(); ++e) {
        const auto& s = report.epochs[e];
        doc["epochs"].push_back({{"epoch", e},
                                 {"l_proj", s.l_proj},
                                 {"l_orient", s.l_orient},
                                 {"l_shape", s.l_shape},
                                 {"total", s.total},
                                 {"gaussians", s.gaussians},
                                 {"regularizer_steps", s.regularizer_steps},
                                 {"position_lr", s.position_lr},
                                 {"seconds", s.seconds}});
    }
    write_text_file(path, doc.dump(2) + "\n");
}

} // namespace edgegs
