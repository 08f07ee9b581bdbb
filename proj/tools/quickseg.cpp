// quickseg command-line front end.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "quickseg/cache_io.hpp"
#include "quickseg/config.hpp"
#include "quickseg/edge.hpp"
#include "quickseg/errors.hpp"
#include "quickseg/eval.hpp"
#include "quickseg/image.hpp"
#include "quickseg/mock_backend.hpp"
#include "quickseg/prompt.hpp"
#include "quickseg/rle.hpp"
#include "quickseg/scene.hpp"
#include "quickseg/service.hpp"

namespace fs = std::filesystem;
using namespace quickseg;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kInputError = 2, kBackendError = 3, kConfigError = 4 };

struct GlobalFlags {
    std::string config_path;
    std::string backend;
    std::string embedding;
    std::optional<double> conf;
    std::optional<double> iou;
    std::optional<int> max_det;
    std::optional<int> input_size;
    std::string out;
    bool pretty = false;
};

bool use_color() { return std::getenv("NO_COLOR") == nullptr && isatty(fileno(stderr)); }

void diagnostic(const std::string& kind, const std::string& msg) {
    if (use_color()) {
        std::cerr << "\033[1;31m" << kind << ":\033[0m " << msg << '\n';
    } else {
        std::cerr << kind << ": " << msg << '\n';
    }
}

PipelineConfig resolve_config(const GlobalFlags& g) {
    PipelineConfig c;
    if (!g.config_path.empty()) {
        c = load_config(g.config_path);
    }
    c = apply_env(std::move(c));
    if (!g.backend.empty()) {
        c.backend = g.backend;
    }
    if (!g.embedding.empty()) {
        c.embedding = g.embedding;
    }
    if (g.conf) {
        c.segment.nms.conf_thresh = *g.conf;
    }
    if (g.iou) {
        c.segment.nms.iou_thresh = *g.iou;
    }
    if (g.max_det) {
        c.segment.nms.max_det = *g.max_det;
    }
    if (g.input_size) {
        c.input_size = *g.input_size;
    }
    return config_from_json(config_to_json(c));  // re-validates the merged result
}

void emit(const GlobalFlags& g, const nlohmann::json& j, const std::string& out_path = {}) {
    const std::string text = j.dump(g.pretty ? 2 : -1) + "\n";
    const std::string& path = out_path.empty() ? g.out : out_path;
    if (path.empty() || path == "-") {
        std::cout << text;
    } else {
        write_file(path, text);
    }
}

double ms_between(std::chrono::steady_clock::time_point a, std::chrono::steady_clock::time_point b) {
    return std::chrono::duration<double, std::milli>(b - a).count();
}

PromptPoint parse_point(const std::string& s) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, ',');) {
        parts.push_back(item);
    }
    if (parts.size() < 2 || parts.size() > 3) {
        throw InputError("--point expects x,y[,fg|bg], got '" + s + "'");
    }
    PromptPoint p;
    try {
        p.x = std::stod(parts[0]);
        p.y = std::stod(parts[1]);
    } catch (const std::exception&) {
        throw InputError("--point coordinates must be numbers, got '" + s + "'");
    }
    if (parts.size() == 3) {
        if (parts[2] == "bg") {
            p.label = PointLabel::Background;
        } else if (parts[2] != "fg") {
            throw InputError("--point label must be fg or bg, got '" + parts[2] + "'");
        }
    }
    return p;
}

BoundingBox parse_box(const std::string& s) {
    std::vector<double> v;
    std::stringstream ss(s);
    try {
        for (std::string item; std::getline(ss, item, ',');) {
            v.push_back(std::stod(item));
        }
    } catch (const std::exception&) {
        throw InputError("--box expects x1,y1,x2,y2, got '" + s + "'");
    }
    if (v.size() != 4) {
        throw InputError("--box expects x1,y1,x2,y2, got '" + s + "'");
    }
    return {v[0], v[1], v[2], v[3]};
}

/// Mask pixel nearest the centre of the mask's bounding box.
std::optional<PromptPoint> interior_point(const BinaryMask& m) {
    const BoundingBox b = bbox_of(m);
    if (b.empty()) {
        return std::nullopt;
    }
    const double cx = (b.x1 + b.x2) / 2;
    const double cy = (b.y1 + b.y2) / 2;
    std::optional<PromptPoint> best;
    double best_d = 0;
    for (int y = static_cast<int>(b.y1); y < static_cast<int>(b.y2); ++y) {
        for (int x = static_cast<int>(b.x1); x < static_cast<int>(b.x2); ++x) {
            if (!m.get(x, y)) {
                continue;
            }
            const double d = (x + 0.5 - cx) * (x + 0.5 - cx) + (y + 0.5 - cy) * (y + 0.5 - cy);
            if (!best || d < best_d) {
                best = PromptPoint{x + 0.5, y + 0.5, PointLabel::Foreground};
                best_d = d;
            }
        }
    }
    return best;
}

RgbImage overlay(const SegmentCache& cache) {
    RgbImage out = *cache.image;
    for (std::size_t i = 0; i < cache.instances.size(); ++i) {
        // Golden-ratio hue walk gives well separated colours for neighbouring indices.
        const double h = std::fmod(0.61803398875 * static_cast<double>(i), 1.0) * 6.0;
        const int sector = static_cast<int>(h);
        const double f = h - sector;
        const double rgb[6][3] = {{1, f, 0}, {1 - f, 1, 0}, {0, 1, f}, {0, 1 - f, 1}, {f, 0, 1}, {1, 0, 1 - f}};
        const auto& m = cache.instances[i].mask;
        for (int y = 0; y < m.height(); ++y) {
            for (int x = 0; x < m.width(); ++x) {
                if (!m.get(x, y)) {
                    continue;
                }
                std::uint8_t* px = out.pixel(x, y);
                for (int c = 0; c < 3; ++c) {
                    px[c] = static_cast<std::uint8_t>(std::lround(0.5 * px[c] + 0.5 * 255.0 * rgb[sector][c]));
                }
            }
        }
    }
    return out;
}

struct Pipeline {
    PipelineConfig config;
    std::shared_ptr<const InferenceBackend> backend;
    std::shared_ptr<const EmbeddingBackend> embedder;
    std::unique_ptr<Segmenter> segmenter;
};

Pipeline build_pipeline(const GlobalFlags& g) {
    Pipeline p;
    p.config = resolve_config(g);
    p.backend = make_backend(p.config);
    p.embedder = make_embedder(p.config, p.backend.get());
    p.segmenter = std::make_unique<Segmenter>(p.backend, p.config.segment);
    return p;
}

std::shared_ptr<const SegmentCache> segment_file(const Pipeline& p, const std::string& path) {
    auto image = std::make_shared<const RgbImage>(load_image(path));
    return p.segmenter->segment_everything(image, fs::path(path).stem().string());
}

// ---------------------------------------------------------------------------------------------

int cmd_segment(const GlobalFlags& g, const std::vector<std::string>& images, const std::string& out_dir,
                const std::string& format) {
    const Pipeline p = build_pipeline(g);
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
    }
    nlohmann::json docs = nlohmann::json::array();
    for (const auto& path : images) {
        const auto cache = segment_file(p, path);
        const nlohmann::json doc = cache_to_json(*cache);
        const std::string stem = fs::path(path).stem().string();
        if (out_dir.empty()) {
            docs.push_back(doc);
            continue;
        }
        emit(g, doc, (fs::path(out_dir) / (stem + ".json")).string());
        if (format == "png") {
            write_file((fs::path(out_dir) / (stem + "_overlay.png")).string(), encode_png(overlay(*cache)));
            for (std::size_t i = 0; i < cache->instances.size(); ++i) {
                const auto bytes = cache->instances[i].mask.to_bytes();
                std::vector<std::uint8_t> gray(bytes.size());
                std::transform(bytes.begin(), bytes.end(), gray.begin(), [](std::uint8_t b) { return b ? 255 : 0; });
                const auto name = stem + "_mask" + std::to_string(i) + ".png";
                write_file((fs::path(out_dir) / name).string(), encode_gray_png(cache->width(), cache->height(), gray));
            }
        }
    }
    if (out_dir.empty()) {
        emit(g, docs.size() == 1 ? docs[0] : nlohmann::json{{"results", docs}});
    }
    return kOk;
}

int cmd_prompt(const GlobalFlags& g, const std::string& image, const std::vector<std::string>& points,
               const std::string& box, const std::string& text, const std::string& mask_out) {
    const int given = (!points.empty() ? 1 : 0) + (!box.empty() ? 1 : 0) + (!text.empty() ? 1 : 0);
    if (given != 1) {
        throw InputError("give exactly one of --point (repeatable), --box or --text");
    }
    PromptSpec spec;
    if (!points.empty()) {
        std::vector<PromptPoint> pts;
        for (const auto& s : points) {
            pts.push_back(parse_point(s));
        }
        spec.value = std::move(pts);
    } else if (!box.empty()) {
        spec.value = parse_box(box);
    } else {
        spec.value = text;
    }
    spec.validate();
    const Pipeline p = build_pipeline(g);
    const auto t0 = std::chrono::steady_clock::now();
    const auto cache = segment_file(p, image);
    const auto t1 = std::chrono::steady_clock::now();
    EmbeddingMemo memo;
    const PromptResult r = run_prompt(*cache, spec, p.embedder.get(), &memo, p.config.merge);
    const auto t2 = std::chrono::steady_clock::now();
    nlohmann::json scores = nlohmann::json::array();
    for (std::size_t i : r.indices) {
        scores.push_back(r.candidate_scores[i]);
    }
    if (!mask_out.empty()) {
        const auto bytes = r.mask.to_bytes();
        std::vector<std::uint8_t> gray(bytes.size());
        std::transform(bytes.begin(), bytes.end(), gray.begin(), [](std::uint8_t b) { return b ? 255 : 0; });
        write_file(mask_out, encode_gray_png(r.mask.width(), r.mask.height(), gray));
    }
    emit(g, {{"image_id", cache->image_id},
             {"prompt", prompt_to_json(spec)},
             {"indices", r.indices},
             {"scores", scores},
             {"candidate_scores", r.candidate_scores},
             {"area", r.mask.count()},
             {"mask", rle_to_json(rle_encode(r.mask))},
             {"timing_ms", {{"stage_one", ms_between(t0, t1)}, {"prompt", ms_between(t1, t2)}}}});
    return kOk;
}

int cmd_edges(const GlobalFlags& g, const std::string& image, const std::string& out) {
    const Pipeline p = build_pipeline(g);
    const auto cache = segment_file(p, image);
    const EdgeMap e = edges_from_cache(*cache, p.config.edge);
    write_file(out, edge_to_png(e));
    std::size_t nonzero = 0;
    for (float v : e.strength.values) {
        nonzero += v > 0 ? 1 : 0;
    }
    std::cerr << "wrote " << out << " (" << e.width() << "x" << e.height() << ", " << nonzero << " edge pixels)\n";
    return kOk;
}

std::vector<int> parse_budgets(const std::string& s) {
    std::vector<int> ks;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, ',');) {
        try {
            ks.push_back(std::stoi(item));
        } catch (const std::exception&) {
            throw InputError("--k expects comma-separated integers, got '" + s + "'");
        }
        if (ks.back() < 1) {
            throw InputError("--k budgets must be positive");
        }
    }
    if (ks.empty()) {
        throw InputError("--k needs at least one budget");
    }
    return ks;
}

int cmd_eval_proposals(const GlobalFlags& g, const std::string& ann, const std::string& props,
                       const std::string& budgets, const std::string& iou_type) {
    const AnnotationSet a = load_coco_json(ann);
    const ProposalSet p = load_proposals(props, a);
    const auto ks = parse_budgets(budgets);
    if (iou_type != "bbox" && iou_type != "segm") {
        throw InputError("--iou-type must be bbox or segm");
    }
    emit(g, proposal_report(p, a, ks, iou_type == "bbox" ? IouType::Box : IouType::Mask));
    return kOk;
}

std::vector<fs::path> image_files(const std::string& dir) {
    if (!fs::is_directory(dir)) {
        throw InputError(dir + " is not a directory");
    }
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        const auto ext = e.path().extension().string();
        if (e.is_regular_file() && (ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp")) {
            files.push_back(e.path());
        }
    }
    std::sort(files.begin(), files.end());
    return files;
}

int cmd_eval_edges(const GlobalFlags& g, const std::string& pred_dir, const std::string& gt_dir, double tol,
                   int thresholds) {
    std::vector<EdgeMap> preds;
    std::vector<BinaryMask> gts;
    nlohmann::json names = nlohmann::json::array();
    const auto pred_files = image_files(pred_dir);
    for (const auto& gt_path : image_files(gt_dir)) {
        const auto match = std::find_if(pred_files.begin(), pred_files.end(),
                                        [&](const fs::path& p) { return p.stem() == gt_path.stem(); });
        if (match == pred_files.end()) {
            throw InputError("no prediction for ground truth " + gt_path.filename().string() + " in " + pred_dir);
        }
        int gw = 0, gh = 0, pw = 0, ph = 0;
        const auto gt_gray = decode_gray(read_file(gt_path.string()), gw, gh);
        const auto pred_gray = decode_gray(read_file(match->string()), pw, ph);
        if (gw != pw || gh != ph) {
            throw InputError(match->filename().string() + " and its ground truth differ in size");
        }
        BinaryMask gt(gw, gh);
        for (int y = 0; y < gh; ++y) {
            for (int x = 0; x < gw; ++x) {
                if (gt_gray[static_cast<std::size_t>(y) * gw + x] != 0) {
                    gt.set(x, y);
                }
            }
        }
        gts.push_back(std::move(gt));
        preds.push_back(edge_from_gray(pw, ph, pred_gray));
        names.push_back(gt_path.stem().string());
    }
    if (gts.empty()) {
        throw InputError("no ground-truth images in " + gt_dir);
    }
    const EdgeMetrics m = edge_metrics(preds, gts, tol, thresholds);
    nlohmann::json report = edge_report(m, tol, gts.size());
    if (tol < 0) {
        report["tolerance_px"] = "per-image max(2, round(0.0075 * diagonal))";
    }
    report["image_names"] = names;
    emit(g, report);
    return kOk;
}

HttpServer* g_server = nullptr;

void on_signal(int) {
    if (g_server) {
        g_server->stop();
    }
}

int cmd_serve(const GlobalFlags& g, std::optional<int> port, const std::string& host) {
    Pipeline p = build_pipeline(g);
    if (port) {
        p.config.service.port = *port;
    }
    if (!host.empty()) {
        p.config.service.host = host;
    }
    Service service(p.config, p.backend, p.embedder);
    HttpServer server(service);
    const int bound = server.bind();
    if (bound < 0) {
        throw ConfigError("cannot bind " + p.config.service.host + ":" + std::to_string(p.config.service.port));
    }
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cerr << nlohmann::json{{"event", "listening"},
                                {"host", p.config.service.host},
                                {"port", bound},
                                {"backend", p.backend->name()}}
                     .dump()
              << std::endl;
    const bool ok = server.run();
    g_server = nullptr;
    return ok ? kOk : kFailure;
}

double median(std::vector<double> v) {
    if (v.empty()) {
        return 0;
    }
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2;
}

double percentile(std::vector<double> v, double q) {
    if (v.empty()) {
        return 0;
    }
    std::sort(v.begin(), v.end());
    const auto idx = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size()))) - 1;
    return v[std::min(idx, v.size() - 1)];
}

int cmd_bench(GlobalFlags g, const std::string& scene_path, const std::string& image_path, int prompts,
              const std::string& kind) {
    if (prompts < 1) {
        throw InputError("--prompts must be at least 1");
    }
    if (kind != "point" && kind != "box") {
        throw InputError("--kind must be point or box");
    }
    RgbImage image;
    if (!scene_path.empty()) {
        if (g.backend.empty()) {
            g.backend = "mock:" + scene_path;
        }
        image = render_scene(load_scene(scene_path));
    } else if (!image_path.empty()) {
        image = load_image(image_path);
    } else {
        throw InputError("bench needs --scene or --image");
    }
    const Pipeline p = build_pipeline(g);
    const auto shared = std::make_shared<const RgbImage>(std::move(image));
    const auto t0 = std::chrono::steady_clock::now();
    const auto cache = p.segmenter->segment_everything(shared, "bench");
    const auto t1 = std::chrono::steady_clock::now();

    std::vector<PromptSpec> specs;
    for (const auto& inst : cache->instances) {
        if (kind == "box") {
            specs.push_back(PromptSpec{inst.mask_box});
        } else if (auto pt = interior_point(inst.mask)) {
            specs.push_back(PromptSpec{std::vector<PromptPoint>{*pt}});
        }
    }
    if (specs.empty()) {
        specs.push_back(PromptSpec{BoundingBox{0, 0, static_cast<double>(cache->width()),
                                               static_cast<double>(cache->height())}});
    }
    std::vector<double> times;
    times.reserve(static_cast<std::size_t>(prompts));
    std::size_t selected = 0;
    for (int i = 0; i < prompts; ++i) {
        const auto& spec = specs[static_cast<std::size_t>(i) % specs.size()];
        const auto a = std::chrono::steady_clock::now();
        const PromptResult r = run_prompt(*cache, spec, p.embedder.get(), nullptr, p.config.merge);
        const auto b = std::chrono::steady_clock::now();
        selected += r.indices.size();
        times.push_back(ms_between(a, b));
    }
    const double total = std::accumulate(times.begin(), times.end(), 0.0);
    const std::size_t half = times.size() / 2;
    const std::vector<double> first(times.begin(), times.begin() + static_cast<std::ptrdiff_t>(half));
    const std::vector<double> second(times.begin() + static_cast<std::ptrdiff_t>(half), times.end());
    emit(g, {{"backend", p.backend->name()},
             {"width", cache->width()},
             {"height", cache->height()},
             {"instances", cache->instances.size()},
             {"prompt_kind", kind},
             {"prompts", prompts},
             {"selected_total", selected},
             {"stage_one_ms", ms_between(t0, t1)},
             {"per_prompt_ms",
              {{"median", median(times)},
               {"mean", total / static_cast<double>(times.size())},
               {"p90", percentile(times, 0.9)},
               {"min", *std::min_element(times.begin(), times.end())},
               {"max", *std::max_element(times.begin(), times.end())},
               {"median_first_half", median(first)},
               {"median_second_half", median(second)}}},
             {"total_ms", ms_between(t0, t1) + total}});
    return kOk;
}

int cmd_render(const GlobalFlags& g, const std::string& scene_path, const std::string& out) {
    (void)g;
    write_file(out, encode_png(render_scene(load_scene(scene_path))));
    return kOk;
}

int cmd_gen_scene(const GlobalFlags& g, std::uint64_t seed, int width, int height, int min_shapes, int max_shapes,
                  const std::string& grid) {
    SyntheticScene s;
    if (!grid.empty()) {
        int rows = 0, cols = 0;
        if (std::sscanf(grid.c_str(), "%dx%d", &rows, &cols) != 2 || rows < 1 || cols < 1) {
            throw InputError("--grid expects ROWSxCOLS, got '" + grid + "'");
        }
        s = grid_scene(width, rows, cols);
    } else {
        SceneGenOptions opts;
        opts.width = width;
        opts.height = height;
        opts.min_shapes = min_shapes;
        opts.max_shapes = max_shapes;
        s = generate_scene(seed, opts);
    }
    emit(g, scene_to_json(s));
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"quickseg: segment-everything then prompt, with evaluation tools"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", "quickseg 0.1.0");

    GlobalFlags g;
    app.add_option("--config", g.config_path, "JSON configuration file (flags override it)");
    app.add_option("--backend", g.backend, "mock:<scene.json> or onnx:<model.onnx>");
    app.add_option("--embedding", g.embedding, "mock or onnx:<image_encoder.onnx>,<text_table.json>");
    app.add_option("--conf", g.conf, "confidence threshold");
    app.add_option("--iou", g.iou, "NMS IoU threshold");
    app.add_option("--max-det", g.max_det, "maximum detections per image");
    app.add_option("--input-size", g.input_size, "network input side (multiple of 32)");
    app.add_flag("--pretty", g.pretty, "indent JSON output");

    std::function<int()> run;

    auto* seg = app.add_subcommand("segment", "everything-mode segmentation dump");
    std::vector<std::string> seg_images;
    std::string seg_dir;
    std::string seg_format = "json";
    seg->add_option("images", seg_images, "input images")->required()->check(CLI::ExistingFile);
    seg->add_option("--out", seg_dir, "write <stem>.json (and PNGs) into this directory instead of stdout");
    seg->add_option("--format", seg_format, "json or png")->check(CLI::IsMember({"json", "png"}));
    seg->callback([&] {
        if (seg_format == "png" && seg_dir.empty()) {
            throw InputError("--format png needs --out <dir>");
        }
        run = [&] { return cmd_segment(g, seg_images, seg_dir, seg_format); };
    });

    auto* pr = app.add_subcommand("prompt", "one-shot prompting");
    std::string pr_image, pr_box, pr_text, pr_mask;
    std::vector<std::string> pr_points;
    pr->add_option("image", pr_image, "input image")->required()->check(CLI::ExistingFile);
    pr->add_option("--point", pr_points, "x,y[,fg|bg]; repeatable")->allow_extra_args(false);
    pr->add_option("--box", pr_box, "x1,y1,x2,y2");
    pr->add_option("--text", pr_text, "text query");
    pr->add_option("--mask-out", pr_mask, "also write the merged mask as a PNG");
    pr->add_option("--out", g.out, "write the JSON report here instead of stdout");
    pr->callback([&] { run = [&] { return cmd_prompt(g, pr_image, pr_points, pr_box, pr_text, pr_mask); }; });

    auto* ed = app.add_subcommand("edges", "edge map from mask probabilities");
    std::string ed_image, ed_out;
    ed->add_option("image", ed_image, "input image")->required()->check(CLI::ExistingFile);
    ed->add_option("--out", ed_out, "output PNG path")->required();
    ed->callback([&] { run = [&] { return cmd_edges(g, ed_image, ed_out); }; });

    auto* ep = app.add_subcommand("eval-proposals", "AR / AUC report");
    std::string ep_ann, ep_props, ep_k = "10,100,1000", ep_type = "bbox";
    ep->add_option("--ann", ep_ann, "COCO/LVIS annotation JSON")->required()->check(CLI::ExistingFile);
    ep->add_option("--props", ep_props, "COCO results JSON or segment output")->required()->check(CLI::ExistingFile);
    ep->add_option("--k", ep_k, "comma-separated proposal budgets");
    ep->add_option("--iou-type", ep_type, "bbox or segm");
    ep->add_option("--out", g.out, "write the JSON report here instead of stdout");
    ep->callback([&] { run = [&] { return cmd_eval_proposals(g, ep_ann, ep_props, ep_k, ep_type); }; });

    auto* ee = app.add_subcommand("eval-edges", "ODS / OIS / AP / R50 report");
    std::string ee_pred, ee_gt;
    double ee_tol = -1;
    int ee_thresholds = 50;
    ee->add_option("--pred", ee_pred, "directory of predicted edge PNGs")->required();
    ee->add_option("--gt", ee_gt, "directory of ground-truth PNGs (nonzero = edge)")->required();
    ee->add_option("--tol", ee_tol, "match tolerance in pixels (default: per-image from the diagonal)");
    ee->add_option("--thresholds", ee_thresholds, "number of strength thresholds")->check(CLI::PositiveNumber);
    ee->add_option("--out", g.out, "write the JSON report here instead of stdout");
    ee->callback([&] { run = [&] { return cmd_eval_edges(g, ee_pred, ee_gt, ee_tol, ee_thresholds); }; });

    auto* sv = app.add_subcommand("serve", "start the HTTP service");
    std::optional<int> sv_port;
    std::string sv_host;
    sv->add_option("--port", sv_port, "listen port (0 = any free port)");
    sv->add_option("--host", sv_host, "listen address");
    sv->callback([&] { run = [&] { return cmd_serve(g, sv_port, sv_host); }; });

    auto* be = app.add_subcommand("bench", "stage-one vs per-prompt latency");
    std::string be_scene, be_image, be_kind = "point";
    int be_prompts = 100;
    be->add_option("--scene", be_scene, "mock scene JSON (implies --backend mock:<scene>)")->check(CLI::ExistingFile);
    be->add_option("--image", be_image, "image for a model backend")->check(CLI::ExistingFile);
    be->add_option("--prompts", be_prompts, "number of prompts");
    be->add_option("--kind", be_kind, "point or box");
    be->add_option("--out", g.out, "write the JSON report here instead of stdout");
    be->callback([&] { run = [&] { return cmd_bench(g, be_scene, be_image, be_prompts, be_kind); }; });

    auto* rd = app.add_subcommand("render", "render a mock scene to PNG");
    std::string rd_scene, rd_out;
    rd->add_option("scene", rd_scene, "scene JSON")->required()->check(CLI::ExistingFile);
    rd->add_option("--out", rd_out, "output PNG")->required();
    rd->callback([&] { run = [&] { return cmd_render(g, rd_scene, rd_out); }; });

    auto* gs = app.add_subcommand("gen-scene", "generate a random mock scene JSON");
    std::uint64_t gs_seed = 1;
    int gs_w = 640, gs_h = 480, gs_min = 1, gs_max = 8;
    std::string gs_grid;
    gs->add_option("--seed", gs_seed, "random seed");
    gs->add_option("--width", gs_w, "image width (grid: image side)");
    gs->add_option("--height", gs_h, "image height");
    gs->add_option("--min-shapes", gs_min, "minimum number of shapes");
    gs->add_option("--max-shapes", gs_max, "maximum number of shapes");
    gs->add_option("--grid", gs_grid, "ROWSxCOLS grid of squares instead of a random scene");
    gs->add_option("--out", g.out, "write the JSON report here instead of stdout");
    gs->callback([&] { run = [&] { return cmd_gen_scene(g, gs_seed, gs_w, gs_h, gs_min, gs_max, gs_grid); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kInputError;
    } catch (const InputError& e) {
        diagnostic("input error", e.what());
        return kInputError;
    }

    try {
        return run();
    } catch (const InputError& e) {
        diagnostic("input error", e.what());
        return kInputError;
    } catch (const SchemaError& e) {
        diagnostic("input error", e.what());
        return kInputError;
    } catch (const MalformedRleError& e) {
        diagnostic("input error", e.what());
        return kInputError;
    } catch (const DimensionError& e) {
        diagnostic("input error", e.what());
        return kInputError;
    } catch (const BackendError& e) {
        diagnostic("backend error", e.what());
        return kBackendError;
    } catch (const CapacityError& e) {
        diagnostic("backend error", e.what());
        return kBackendError;
    } catch (const ConfigError& e) {
        diagnostic("configuration error", e.what());
        return kConfigError;
    } catch (const std::exception& e) {
        diagnostic("error", e.what());
        return kFailure;
    }
}
