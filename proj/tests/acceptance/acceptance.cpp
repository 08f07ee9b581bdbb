// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "quickseg/cache_io.hpp"
#include "quickseg/edge.hpp"
#include "quickseg/eval.hpp"
#include "quickseg/maskgen.hpp"
#include "quickseg/mock_backend.hpp"
#include "quickseg/prompt.hpp"
#include "quickseg/rle.hpp"
#include "quickseg/scene.hpp"
#include "quickseg/service.hpp"

using namespace quickseg;
using steady = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(const char* id, bool ok, const std::string& what, const std::string& detail) {
    std::printf("%s %s %s (%s)\n", ok ? "PASS" : "FAIL", id, what.c_str(), detail.c_str());
    std::fflush(stdout);
    failures += ok ? 0 : 1;
}

double seconds_since(steady::time_point t0) { return std::chrono::duration<double>(steady::now() - t0).count(); }

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// ---------------------------------------------------------------------------------------------
// P1. Oracle: sigmoid of the per-pixel coefficient sum at each of the four prototype cells around
// the sample point, then bilinear weights computed from scratch.

double naive_prob(const std::vector<float>& c, const std::vector<float>& protos, int k, int s, double px, double py) {
    auto cell = [&](int x, int y) {
        x = std::clamp(x, 0, s - 1);
        y = std::clamp(y, 0, s - 1);
        double l = 0;
        for (int i = 0; i < k; ++i) l += static_cast<double>(c[i]) * protos[(static_cast<std::size_t>(i) * s + y) * s + x];
        return sigmoid(l);
    };
    px = std::max(px, 0.0);
    py = std::max(py, 0.0);
    const int x0 = static_cast<int>(std::floor(px)), y0 = static_cast<int>(std::floor(py));
    const double fx = x0 >= s - 1 ? 0.0 : px - x0;
    const double fy = y0 >= s - 1 ? 0.0 : py - y0;
    return (1 - fy) * ((1 - fx) * cell(x0, y0) + fx * cell(x0 + 1, y0)) +
           fy * ((1 - fx) * cell(x0, y0 + 1) + fx * cell(x0 + 1, y0 + 1));
}

void p1() {
    const auto t0 = steady::now();
    std::mt19937_64 rng(101);
    std::normal_distribution<float> n(0, 1.5f);
    std::uniform_int_distribution<int> kd(1, 32);
    std::uniform_real_distribution<double> u(0, 1);
    const int s = 8, input = 32;
    double worst = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const int k = kd(rng);
        std::vector<float> protos(static_cast<std::size_t>(k) * s * s), c(k);
        for (auto& v : protos) v = n(rng);
        for (auto& v : c) v = n(rng) / 2;
        // Even trials sample at prototype resolution, odd ones upsample 4x inside a random box.
        const bool up = trial % 2 == 1;
        const MaskGeometry geom = up ? MaskGeometry::input_frame(input) : MaskGeometry{s, s, 4.0, 0.0, 0.0};
        BoundingBox box{0, 0, double(geom.width), double(geom.height)};
        if (up) {
            const double x1 = u(rng) * 16, y1 = u(rng) * 16;
            box = {x1, y1, x1 + 4 + u(rng) * 12, y1 + 4 + u(rng) * 12};
        }
        const AssembledMask m = assemble_mask(c, PrototypeView{k, s, protos}, input, box, 0.5, geom);
        for (int y = 0; y < geom.height; ++y) {
            for (int x = 0; x < geom.width; ++x) {
                const bool inside = x + 0.5 >= box.x1 && x + 0.5 < box.x2 && y + 0.5 >= box.y1 && y + 0.5 < box.y2;
                const double px = ((x + 0.5) * geom.scale) * s / input - 0.5;
                const double py = ((y + 0.5) * geom.scale) * s / input - 0.5;
                const double want = inside ? naive_prob(c, protos, k, s, px, py) : 0.0;
                worst = std::max(worst, std::abs(m.prob.at(x, y) - want));
            }
        }
    }
    const double secs = seconds_since(t0);
    report("P1", worst <= 1e-6 && secs < 10, "mask assembly equals naive sum+sigmoid oracle on 200 random cases",
           fmt("max abs error %.3g, %.2f s", worst, secs));
}

// ---------------------------------------------------------------------------------------------
// P2. Oracle: suppression-flag NMS with explicit pairwise loop.

std::vector<std::size_t> reference_nms(const std::vector<Detection>& d, const NmsParams& p) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < d.size(); ++i)
        if (d[i].score >= p.conf_thresh) idx.push_back(i);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return d[a].score != d[b].score ? d[a].score > d[b].score : d[a].anchor_index < d[b].anchor_index;
    });
    std::vector<char> dead(idx.size(), 0);
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (dead[i]) continue;
        keep.push_back(d[idx[i]].anchor_index);
        const BoundingBox& a = d[idx[i]].box;
        for (std::size_t j = i + 1; j < idx.size(); ++j) {
            const BoundingBox& b = d[idx[j]].box;
            const double iw = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
            const double ih = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
            const double inter = iw * ih;
            const double uni = (a.x2 - a.x1) * (a.y2 - a.y1) + (b.x2 - b.x1) * (b.y2 - b.y1) - inter;
            if (uni > 0 && inter / uni > p.iou_thresh) dead[j] = 1;
        }
    }
    if (keep.size() > static_cast<std::size_t>(p.max_det)) keep.resize(p.max_det);
    return keep;
}

void p2() {
    const auto t0 = steady::now();
    std::mt19937_64 rng(202);
    std::uniform_real_distribution<double> u(0, 1);
    int identical = 0;
    for (int set = 0; set < 100; ++set) {
        std::vector<Detection> dets;
        while (dets.size() < 1000) {
            const double cx = u(rng) * 1024, cy = u(rng) * 1024, w = 8 + u(rng) * 200, h = 8 + u(rng) * 200;
            const int copies = 1 + static_cast<int>(u(rng) * 8);
            for (int c = 0; c < copies && dets.size() < 1000; ++c) {
                const double j = (u(rng) - 0.5) * 0.08;
                Detection d;
                d.box = {cx - w / 2 + j * w, cy - h / 2, cx + w / 2, cy + h / 2 + j * h};
                d.score = std::round(u(rng) * 100) / 100;
                d.anchor_index = dets.size();
                dets.push_back(std::move(d));
            }
        }
        std::shuffle(dets.begin(), dets.end(), rng);
        const NmsParams p{0.4, set % 2 ? 0.9 : 0.5 + 0.4 * u(rng), 300};
        std::vector<std::size_t> got;
        for (const auto& d : filter_and_nms(dets, p)) got.push_back(d.anchor_index);
        identical += got == reference_nms(dets, p) ? 1 : 0;
    }
    const double secs = seconds_since(t0);
    report("P2", identical == 100 && secs < 30, "NMS identical in set and order to the O(n^2) reference",
           fmt("%.0f/100 sets identical, %.2f s", identical, secs));
}

// ---------------------------------------------------------------------------------------------

void p3() {
    const double uniform = dfl_side_distance(std::vector<float>(26, 0.0f));
    double worst = 0;
    for (int j = 0; j < 26; ++j) {
        std::vector<float> hot(26, -50.0f);
        hot[j] = 50.0f;
        worst = std::max(worst, std::abs(dfl_side_distance(hot) - j));
    }
    report("P3", std::abs(uniform - 12.5) <= 1e-9 && worst <= 1e-6, "DFL decoding of uniform and one-hot bins",
           fmt("uniform %.12f, one-hot max error %.3g", uniform, worst));
}

// ---------------------------------------------------------------------------------------------
// P4 / P5 / P9 share 20 generated scenes.

struct SceneRun {
    SyntheticScene scene;
    std::shared_ptr<const SegmentCache> cache;
    std::vector<BinaryMask> truth;
    std::vector<int> instance_of;  // shape -> best-IoU instance, -1 if none
};

std::vector<SceneRun> run_scenes() {
    std::vector<SceneRun> runs;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        SceneRun r;
        r.scene = generate_scene(1000 + seed);
        Segmenter seg(std::make_shared<MockBackend>(r.scene));
        r.cache = seg.segment_everything(render_scene(r.scene), "scene" + std::to_string(seed));
        for (const auto& s : r.scene.shapes) r.truth.push_back(rasterize(s, r.scene.width, r.scene.height));
        for (const auto& t : r.truth) {
            int best = -1;
            double best_iou = 0;
            for (std::size_t i = 0; i < r.cache->instances.size(); ++i) {
                const double iou = mask_iou(r.cache->instances[i].mask, t);
                if (iou > best_iou) best_iou = iou, best = static_cast<int>(i);
            }
            r.instance_of.push_back(best_iou >= 0.95 ? best : -1);
        }
        runs.push_back(std::move(r));
    }
    return runs;
}

void p4(const std::vector<SceneRun>& runs) {
    std::size_t shapes = 0, recovered = 0, spurious = 0;
    double min_iou = 1;
    const double conf = NmsParams{}.conf_thresh;
    for (const auto& r : runs) {
        std::vector<bool> claimed(r.cache->instances.size(), false);
        for (std::size_t s = 0; s < r.truth.size(); ++s) {
            ++shapes;
            double best = 0;
            for (const auto& inst : r.cache->instances) best = std::max(best, mask_iou(inst.mask, r.truth[s]));
            min_iou = std::min(min_iou, best);
            if (r.instance_of[s] >= 0 && !claimed[r.instance_of[s]]) {
                claimed[r.instance_of[s]] = true;
                ++recovered;
            }
        }
        for (std::size_t i = 0; i < claimed.size(); ++i)
            if (!claimed[i] && r.cache->instances[i].score >= conf + 0.1) ++spurious;
    }
    report("P4", recovered == shapes && spurious == 0,
           "every shape of 20 generated scenes recovered at mask IoU >= 0.95, no confident spurious instance",
           fmt("%.0f/%.0f shapes, min IoU %.4f", double(recovered), double(shapes), min_iou) +
               ", spurious " + std::to_string(spurious));
}

/// Pixel-centre mean of a mask, as an image point.
PromptPoint centroid(const BinaryMask& m) {
    double sx = 0, sy = 0;
    std::size_t n = 0;
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x)
            if (m.get(x, y)) sx += x + 0.5, sy += y + 0.5, ++n;
    return {sx / n, sy / n, PointLabel::Foreground};
}

/// Set pixel whose 8 neighbours are also set, so a point there is unambiguous.
bool interior(const BinaryMask& m, int x, int y) {
    for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
            const int u = x + dx, v = y + dy;
            if (u < 0 || v < 0 || u >= m.width() || v >= m.height() || !m.get(u, v)) return false;
        }
    return true;
}

void p5(const std::vector<SceneRun>& runs) {
    std::size_t box_total = 0, box_ok = 0, pt_total = 0, pt_ok = 0, bg_total = 0, bg_ok = 0;
    for (const auto& r : runs) {
        for (std::size_t s = 0; s < r.truth.size(); ++s) {
            const int want = r.instance_of[s];
            ++box_total;
            const PromptResult b = select_by_box(*r.cache, r.scene.shapes[s].bounds());
            box_ok += want >= 0 && b.indices == std::vector<std::size_t>{std::size_t(want)} ? 1 : 0;

            ++pt_total;
            const PromptPoint c = centroid(r.truth[s]);
            const PromptResult p = select_by_points(*r.cache, std::vector<PromptPoint>{c});
            const bool has = want >= 0 && std::count(p.indices.begin(), p.indices.end(), std::size_t(want)) == 1;
            pt_ok += has ? 1 : 0;

            // Every other shape the centroid also falls in is unintended: a background point in it,
            // outside the intended shape, must drop it and keep the intended one.
            for (std::size_t o = 0; o < r.truth.size(); ++o) {
                if (o == s || !r.truth[o].get(int(c.x), int(c.y)) || r.instance_of[o] < 0) continue;
                BinaryMask only = r.truth[o];
                BinaryMask overlap = only;
                overlap &= r.truth[s];
                const BinaryMask& bg_mask = r.cache->instances[r.instance_of[o]].mask;
                std::optional<PromptPoint> bg;
                for (int y = 0; y < only.height() && !bg; ++y)
                    for (int x = 0; x < only.width() && !bg; ++x)
                        if (interior(only, x, y) && !overlap.get(x, y) && bg_mask.get(x, y) &&
                            !r.cache->instances[want].mask.get(x, y))
                            bg = PromptPoint{x + 0.5, y + 0.5, PointLabel::Background};
                if (!bg) continue;
                ++bg_total;
                const PromptResult q = select_by_points(*r.cache, std::vector<PromptPoint>{c, *bg});
                const bool dropped =
                    std::count(q.indices.begin(), q.indices.end(), std::size_t(r.instance_of[o])) == 0;
                const bool kept = std::count(q.indices.begin(), q.indices.end(), std::size_t(want)) == 1;
                bg_ok += dropped && kept ? 1 : 0;
            }
        }
    }
    // A hand-built nested scene guarantees part (c) is exercised.
    SyntheticScene nest;
    nest.width = 200;
    nest.height = 160;
    SceneShape outer;
    outer.kind = ShapeKind::Rect;
    outer.rect = {20, 20, 180, 140};
    SceneShape inner;
    inner.kind = ShapeKind::Disk;
    inner.center = {100, 80};
    inner.radius = 25;
    inner.id = 2;
    nest.shapes = {outer, inner};
    Segmenter seg(std::make_shared<MockBackend>(nest));
    const auto cache = seg.segment_everything(render_scene(nest));
    const PromptResult both = select_by_points(*cache, std::vector<PromptPoint>{{100, 80, PointLabel::Foreground}});
    const PromptResult one = select_by_points(
        *cache, std::vector<PromptPoint>{{100, 80, PointLabel::Foreground}, {30, 30, PointLabel::Background}});
    const BinaryMask disk = rasterize(inner, nest.width, nest.height);
    ++bg_total;
    bg_ok += both.indices.size() == 2 && one.indices.size() == 1 && mask_iou(one.mask, disk) >= 0.95 ? 1 : 0;

    report("P5", box_ok == box_total && pt_ok == pt_total && bg_ok == bg_total,
           "box prompt selects its shape, centroid point includes it, background point removes the overlapping one",
           fmt("box %.0f/%.0f", double(box_ok), double(box_total)) +
               fmt(", point %.0f/%.0f", double(pt_ok), double(pt_total)) +
               fmt(", background %.0f/%.0f", double(bg_ok), double(bg_total)));
}

// ---------------------------------------------------------------------------------------------

void p6() {
    const SyntheticScene grid = grid_scene(1024, 10, 10);
    MockOptions opts;
    opts.num_prototypes = 128;
    auto mock = std::make_shared<MockBackend>(grid, opts);
    PipelineConfig cfg;
    Service service(cfg, mock);
    service.set_log_sink(nullptr);
    const auto png = encode_png(render_scene(grid));
    const HttpResponse up = service.handle({"POST", "/v1/images", std::string(png.begin(), png.end()), {}});
    if (up.status != 200) {
        report("P6", false, "prompt latency independent of prompt count", "upload failed: " + up.body);
        return;
    }
    const auto j = up.json();
    const std::string id = j["session_id"];
    const std::size_t count = j["instance_count"];
    const auto session = service.sessions().find(id);

    std::vector<double> ms;
    for (int i = 0; i < 101; ++i) {
        const auto& inst = session->cache().instances[static_cast<std::size_t>(i) % count];
        const double cx = (inst.mask_box.x1 + inst.mask_box.x2) / 2, cy = (inst.mask_box.y1 + inst.mask_box.y2) / 2;
        const nlohmann::json spec = {{"points", {{{"x", cx}, {"y", cy}, {"label", "fg"}}}}};
        const auto t0 = steady::now();
        const HttpResponse r = service.handle({"POST", "/v1/sessions/" + id + "/prompt", spec.dump(), {}});
        ms.push_back(std::chrono::duration<double, std::milli>(steady::now() - t0).count());
        if (r.status != 200) {
            report("P6", false, "prompt latency independent of prompt count", "prompt failed: " + r.body);
            return;
        }
    }
    const double second = ms[1];
    std::vector<double> rest(ms.begin() + 1, ms.end());
    std::nth_element(rest.begin(), rest.begin() + rest.size() / 2, rest.end());
    const double median = rest[rest.size() / 2];
    const bool within = median <= 2 * second && second <= 2 * median;
    const bool once = mock->infer_calls() == 1 && service.segmenter().runs() == 1;
    report("P6", count == 100 && within && once,
           "100-instance 1024^2 session: median prompt latency within 2x of prompt #2, stage one ran once",
           fmt("instances %.0f, prompt #2 %.3f ms, median #2..#101 %.3f ms", double(count), second, median) +
               ", stage-one runs " + std::to_string(mock->infer_calls()));
}

// ---------------------------------------------------------------------------------------------

void p7() {
    SyntheticScene scene;
    scene.width = 400;
    scene.height = 300;
    const double disks[3][3] = {{100, 100, 60}, {280, 90, 45}, {220, 220, 55}};
    for (int i = 0; i < 3; ++i) {
        SceneShape s;
        s.kind = ShapeKind::Disk;
        s.id = i + 1;
        s.center = {disks[i][0], disks[i][1]};
        s.radius = disks[i][2];
        scene.shapes.push_back(s);
    }
    Segmenter seg(std::make_shared<MockBackend>(scene));
    const auto cache = seg.segment_everything(render_scene(scene));
    const EdgeMap edges = edges_from_cache(*cache);

    // Analytic outline: pixel centres inside a circle with a 4-neighbour centre outside it.
    auto inside = [&](int x, int y, const double* d) { return std::hypot(x + 0.5 - d[0], y + 0.5 - d[1]) <= d[2]; };
    BinaryMask gt(scene.width, scene.height);
    for (int y = 0; y < scene.height; ++y)
        for (int x = 0; x < scene.width; ++x)
            for (const auto& d : disks)
                if (inside(x, y, d) && (!inside(x - 1, y, d) || !inside(x + 1, y, d) || !inside(x, y - 1, d) ||
                                        !inside(x, y + 1, d)))
                    gt.set(x, y);

    const std::vector<EdgeMap> preds{edges};
    const std::vector<BinaryMask> gts{gt};
    const EdgeMetrics m = edge_metrics(preds, gts, 2.0);

    std::mt19937_64 rng(707);
    std::uniform_real_distribution<float> u(0, 1), a(-4, 4);
    int monotone = 0;
    for (int i = 0; i < 100; ++i) {
        FloatMap mag(64, 48), ori(64, 48);
        for (auto& v : mag.values) v = u(rng);
        for (auto& v : ori.values) v = a(rng);
        const EdgeMap out = edge_nms(mag, ori);
        bool ok = true;
        for (std::size_t k = 0; k < mag.values.size(); ++k) ok = ok && out.strength.values[k] <= mag.values[k];
        monotone += ok ? 1 : 0;
    }
    report("P7", m.ods >= 0.9 && monotone == 100,
           "disk-scene edge F-measure vs analytic circles at 2 px, NMS never raises a value",
           fmt("F %.4f at threshold %.3f", m.ods, m.ods_threshold) + fmt(", NMS %.0f/100 maps", double(monotone)));
}

// ---------------------------------------------------------------------------------------------

void p8() {
    // (a) proposals are the annotations themselves.
    const AnnotationSet ann = load_coco_json(std::string(QUICKSEG_TEST_DATA) + "/coco_rle_fixture.json");
    ProposalSet same;
    for (const auto& [id, img] : ann.images) {
        double score = 1.0;
        for (const auto& o : img.objects) same.images[id].push_back(Proposal{o.box, score -= 0.01, o.mask});
    }
    bool a_ok = true;
    for (IouType t : {IouType::Box, IouType::Mask}) {
        for (int k : {10, 100, 1000}) a_ok = a_ok && average_recall(same, ann, k, {t, SizeBucket::All}) == 1.0;
        a_ok = a_ok && proposal_auc(same, ann, {t, SizeBucket::All}) == 1.0;
    }

    // (b) one pair at IoU exactly 0.6.
    AnnotationSet one;
    one.images["1"] = ImageAnnotations{20, 20, {GtObject{{0, 0, 10, 10}, 100, std::nullopt, false, 1}}};
    ProposalSet pair;
    pair.images["1"] = {Proposal{{0, 0, 6, 10}, 0.9, std::nullopt}};
    const double ar = average_recall(pair, one, 100);
    const bool b_ok = std::abs(ar - 0.3) <= 1e-12;

    // (c) shuffled proposal order, distinct scores.
    std::mt19937_64 rng(808);
    std::uniform_real_distribution<double> u(-3, 3);
    ProposalSet noisy;
    double score = 1.0;
    for (const auto& [id, img] : ann.images) {
        for (int rep = 0; rep < 40; ++rep) {
            for (const auto& o : img.objects) {
                const BoundingBox b{o.box.x1 + u(rng), o.box.y1 + u(rng), o.box.x2 + u(rng), o.box.y2 + u(rng)};
                noisy.images[id].push_back(Proposal{b, score -= 1e-4, std::nullopt});
            }
        }
    }
    ProposalSet shuffled = noisy;
    for (auto& [id, v] : shuffled.images) std::shuffle(v.begin(), v.end(), rng);
    shuffled.sort_by_score();
    const std::vector<int> ks{1, 10, 100, 1000};
    const bool c_ok = proposal_report(noisy, ann, ks) == proposal_report(shuffled, ann, ks);

    // (d) compressed RLE fixture popcounts against each record's area field.
    std::size_t objects = 0, exact = 0;
    for (const auto& [id, img] : ann.images)
        for (const auto& o : img.objects) {
            ++objects;
            exact += o.mask && static_cast<double>(o.mask->count()) == o.area ? 1 : 0;
        }
    report("P8", a_ok && b_ok && c_ok && exact == objects && objects > 0,
           "AR/AUC: perfect proposals, IoU-0.6 pair, order invariance, COCO RLE fixture areas",
           std::string(a_ok ? "a ok" : "a FAILED") + fmt(", AR %.15f", ar) + (c_ok ? ", c ok" : ", c FAILED") +
               fmt(", areas %.0f/%.0f", double(exact), double(objects)));
}

// ---------------------------------------------------------------------------------------------

void p9(const std::vector<SceneRun>& runs) {
    std::size_t masks = 0, exact = 0;
    for (const auto& r : runs) {
        Service service(PipelineConfig{}, std::make_shared<MockBackend>(r.scene));
        service.set_log_sink(nullptr);
        const auto png = encode_png(render_scene(r.scene));
        const auto up = service.handle({"POST", "/v1/images", std::string(png.begin(), png.end()), {}});
        const std::string id = up.json()["session_id"];
        const auto doc = service.handle({"GET", "/v1/sessions/" + id + "/everything", "", {}}).json();

        AnnotationSet ann;
        ann.images[id] = ImageAnnotations{r.scene.width, r.scene.height, {}};
        const ProposalSet props = parse_proposals(nlohmann::json::parse(doc.dump()), ann);
        const auto& cache = service.sessions().find(id)->cache();
        const auto& got = props.images.at(id);
        masks += cache.instances.size();
        for (std::size_t i = 0; i < cache.instances.size() && i < got.size(); ++i) {
            const RleMask a = rle_encode(cache.instances[i].mask);
            const RleMask b = rle_encode(*got[i].mask);
            const bool same_string = rle_counts_to_string(b.counts) ==
                                     doc["instances"][i]["segmentation"]["counts"].get<std::string>();
            exact += a == b && *got[i].mask == cache.instances[i].mask && same_string ? 1 : 0;
        }
    }
    report("P9", exact == masks && masks > 0, "service everything output re-ingested by eval is RLE bit-exact",
           fmt("%.0f/%.0f masks identical", double(exact), double(masks)));
}

}  // namespace

int main() {
    p1();
    p2();
    p3();
    const auto runs = run_scenes();
    p4(runs);
    p5(runs);
    p6();
    p7();
    p8();
    p9(runs);
    std::printf("%s: %d criteria failed\n", failures ? "FAILED" : "ALL PASSED", failures);
    return failures ? 1 : 0;
}
