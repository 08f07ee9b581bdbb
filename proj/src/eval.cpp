#include "quickseg/eval.hpp"

#include <algorithm>
#include <cmath>

#include "quickseg/cache_io.hpp"
#include "quickseg/errors.hpp"
#include "quickseg/image.hpp"
#include "quickseg/rle.hpp"
#include "quickseg/scene.hpp"

namespace quickseg {

namespace {

std::string id_key(const nlohmann::json& v, const std::string& path) {
    if (v.is_number_integer()) {
        return std::to_string(v.get<long long>());
    }
    if (v.is_string()) {
        return v.get<std::string>();
    }
    throw SchemaError(path, "image id must be an integer or a string");
}

const nlohmann::json& require(const nlohmann::json& obj, const char* key, const std::string& path) {
    if (!obj.is_object() || !obj.contains(key)) {
        throw SchemaError(path + "." + key, "missing required key '" + std::string(key) + "'");
    }
    return obj[key];
}

BoundingBox parse_xywh(const nlohmann::json& b, const std::string& path) {
    if (!b.is_array() || b.size() != 4 || !std::all_of(b.begin(), b.end(), [](const auto& v) { return v.is_number(); })) {
        throw SchemaError(path, "bbox must be [x, y, w, h]");
    }
    return BoundingBox::from_xywh(b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>());
}

BinaryMask rasterize_polygons(const nlohmann::json& polys, int width, int height, const std::string& path) {
    BinaryMask m(width, height);
    for (std::size_t pi = 0; pi < polys.size(); ++pi) {
        const auto& flat = polys[pi];
        if (!flat.is_array() || flat.size() < 6 || flat.size() % 2 != 0) {
            throw SchemaError(path + "[" + std::to_string(pi) + "]", "polygon must list at least 3 x,y pairs");
        }
        std::vector<Point2> pts;
        for (std::size_t i = 0; i < flat.size(); i += 2) {
            pts.push_back({flat[i].get<double>(), flat[i + 1].get<double>()});
        }
        SceneShape shape;
        shape.kind = ShapeKind::Polygon;
        shape.points = std::move(pts);
        m |= rasterize(shape, width, height);
    }
    return m;
}

BinaryMask parse_segmentation(const nlohmann::json& seg, int width, int height, const std::string& path) {
    if (seg.is_array()) {
        return rasterize_polygons(seg, width, height, path);
    }
    RleMask r = rle_from_json(seg, path);
    if (r.width != width || r.height != height) {
        throw SchemaError(path + ".size", "RLE size " + std::to_string(r.height) + "x" + std::to_string(r.width) +
                                              " does not match image " + std::to_string(height) + "x" +
                                              std::to_string(width));
    }
    try {
        return rle_decode(r);
    } catch (const MalformedRleError& e) {
        throw SchemaError(path + ".counts", e.what());
    }
}

bool in_bucket(const GtObject& o, SizeBucket b) {
    switch (b) {
        case SizeBucket::All: return true;
        case SizeBucket::Small: return o.area < 32.0 * 32.0;
        case SizeBucket::Medium: return o.area >= 32.0 * 32.0 && o.area < 96.0 * 96.0;
        case SizeBucket::Large: return o.area >= 96.0 * 96.0;
    }
    return true;
}

double pair_iou(const GtObject& g, const Proposal& p, IouType t) {
    if (t == IouType::Box) {
        return box_iou(g.box, p.box);
    }
    if (!g.mask || !p.mask) {
        throw InputError("mask IoU requested but a ground-truth object or proposal has no segmentation");
    }
    return mask_iou(*g.mask, *p.mask);
}

}  // namespace

void ProposalSet::sort_by_score() {
    for (auto& [id, props] : images) {
        std::stable_sort(props.begin(), props.end(), [](const Proposal& a, const Proposal& b) { return a.score > b.score; });
    }
}

AnnotationSet parse_coco_json(const nlohmann::json& j) {
    if (!j.is_object()) {
        throw SchemaError("$", "annotation file must be a JSON object");
    }
    const auto& images = require(j, "images", "$");
    if (!images.is_array()) {
        throw SchemaError("$.images", "must be an array");
    }
    AnnotationSet set;
    for (std::size_t i = 0; i < images.size(); ++i) {
        const std::string path = "$.images[" + std::to_string(i) + "]";
        const auto& im = images[i];
        ImageAnnotations ia;
        ia.width = require(im, "width", path).get<int>();
        ia.height = require(im, "height", path).get<int>();
        set.images[id_key(require(im, "id", path), path + ".id")] = std::move(ia);
    }
    const auto& anns = require(j, "annotations", "$");
    if (!anns.is_array()) {
        throw SchemaError("$.annotations", "must be an array");
    }
    for (std::size_t i = 0; i < anns.size(); ++i) {
        const std::string path = "$.annotations[" + std::to_string(i) + "]";
        const auto& a = anns[i];
        const std::string key = id_key(require(a, "image_id", path), path + ".image_id");
        auto it = set.images.find(key);
        if (it == set.images.end()) {
            throw SchemaError(path + ".image_id", "refers to unknown image " + key);
        }
        ImageAnnotations& ia = it->second;
        GtObject o;
        o.crowd = a.value("iscrowd", 0) != 0;
        o.category_id = a.value("category_id", 0);
        if (a.contains("segmentation") && !a["segmentation"].is_null()) {
            o.mask = parse_segmentation(a["segmentation"], ia.width, ia.height, path + ".segmentation");
        }
        if (a.contains("bbox")) {
            o.box = parse_xywh(a["bbox"], path + ".bbox");
        } else if (o.mask) {
            o.box = bbox_of(*o.mask);
        } else {
            throw SchemaError(path + ".bbox", "missing required key 'bbox'");
        }
        if (a.contains("area") && a["area"].is_number()) {
            o.area = a["area"].get<double>();
        } else {
            o.area = o.mask ? static_cast<double>(o.mask->count()) : o.box.area();
        }
        ia.objects.push_back(std::move(o));
    }
    return set;
}

AnnotationSet load_coco_json(const std::string& path) {
    const auto bytes = read_file(path);
    try {
        return parse_coco_json(nlohmann::json::parse(bytes.begin(), bytes.end()));
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError(path + " is not valid JSON: " + e.what());
    }
}

ProposalSet parse_proposals(const nlohmann::json& j, const AnnotationSet& annotations) {
    const nlohmann::json* list = &j;
    std::string base = "$";
    if (j.is_object()) {
        list = &require(j, "instances", "$");
        base = "$.instances";
    }
    if (!list->is_array()) {
        throw SchemaError(base, "proposals must be an array of result records");
    }
    ProposalSet set;
    for (const auto& [id, _] : annotations.images) {
        set.images[id];
    }
    for (std::size_t i = 0; i < list->size(); ++i) {
        const std::string path = base + "[" + std::to_string(i) + "]";
        const auto& r = (*list)[i];
        const std::string key = id_key(require(r, "image_id", path), path + ".image_id");
        const auto ann = annotations.images.find(key);
        if (ann == annotations.images.end()) {
            throw InputError("ingestion: proposal " + path + " refers to image " + key +
                             " which is not in the annotation set");
        }
        Proposal p;
        if (r.contains("box")) {
            const auto& b = r["box"];
            p.box = {b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(), b.at(3).get<double>()};
        } else {
            p.box = parse_xywh(require(r, "bbox", path), path + ".bbox");
        }
        p.score = require(r, "score", path).get<double>();
        if (r.contains("segmentation") && !r["segmentation"].is_null()) {
            p.mask = parse_segmentation(r["segmentation"], ann->second.width, ann->second.height, path + ".segmentation");
        }
        set.images[key].push_back(std::move(p));
    }
    set.sort_by_score();
    return set;
}

ProposalSet load_proposals(const std::string& path, const AnnotationSet& annotations) {
    const auto bytes = read_file(path);
    try {
        return parse_proposals(nlohmann::json::parse(bytes.begin(), bytes.end()), annotations);
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError(path + " is not valid JSON: " + e.what());
    }
}

std::vector<double> ar_thresholds() {
    std::vector<double> t;
    for (int i = 0; i < 10; ++i) {
        t.push_back((50 + 5 * i) / 100.0);
    }
    return t;
}

std::vector<double> auc_thresholds() {
    std::vector<double> t;
    for (int i = 0; i <= 10; ++i) {
        t.push_back((50 + 5 * i) / 100.0);
    }
    return t;
}

std::vector<double> recall_at(const ProposalSet& proposals, const AnnotationSet& annotations, int k,
                              std::span<const double> thresholds, const RecallOptions& opts) {
    if (k < 1) {
        throw InputError("proposal budget k must be at least 1");
    }
    for (double t : thresholds) {
        if (!(t > 0.0 && t <= 1.0)) {
            throw InputError("IoU thresholds must lie in (0, 1]");
        }
    }
    for (const auto& [id, _] : proposals.images) {
        if (!annotations.images.contains(id)) {
            throw InputError("ingestion: proposals refer to image " + id + " which is not in the annotation set");
        }
    }
    std::vector<std::size_t> matched(thresholds.size(), 0);
    std::size_t total = 0;
    static const std::vector<Proposal> kNone;
    for (const auto& [id, ann] : annotations.images) {
        std::vector<const GtObject*> gts;
        for (const auto& o : ann.objects) {
            if (!o.crowd && in_bucket(o, opts.bucket)) {
                gts.push_back(&o);
            }
        }
        total += gts.size();
        if (gts.empty()) {
            continue;
        }
        const auto pit = proposals.images.find(id);
        const std::vector<Proposal>& props = pit == proposals.images.end() ? kNone : pit->second;
        const std::size_t np = std::min(props.size(), static_cast<std::size_t>(k));
        if (np == 0) {
            continue;
        }
        std::vector<double> iou(gts.size() * np);
        for (std::size_t g = 0; g < gts.size(); ++g) {
            for (std::size_t p = 0; p < np; ++p) {
                iou[g * np + p] = pair_iou(*gts[g], props[p], opts.iou_type);
            }
        }
        for (std::size_t ti = 0; ti < thresholds.size(); ++ti) {
            std::vector<bool> used(np, false);
            for (std::size_t g = 0; g < gts.size(); ++g) {
                std::optional<std::size_t> best;
                for (std::size_t p = 0; p < np; ++p) {
                    const double v = iou[g * np + p];
                    if (used[p] || v < thresholds[ti]) {
                        continue;
                    }
                    if (!best || v > iou[g * np + *best]) {
                        best = p;
                    }
                }
                if (best) {
                    used[*best] = true;
                    ++matched[ti];
                }
            }
        }
    }
    std::vector<double> recall(thresholds.size(), 0.0);
    if (total == 0) {
        return recall;
    }
    for (std::size_t i = 0; i < recall.size(); ++i) {
        recall[i] = static_cast<double>(matched[i]) / static_cast<double>(total);
    }
    return recall;
}

double average_recall(const ProposalSet& proposals, const AnnotationSet& annotations, int k,
                      const RecallOptions& opts) {
    const auto t = ar_thresholds();
    const auto r = recall_at(proposals, annotations, k, t, opts);
    double sum = 0;
    for (double v : r) {
        sum += v;
    }
    return sum / static_cast<double>(r.size());
}

namespace {

double trapezoid_auc(const std::vector<double>& r) {
    // Uniform spacing: area / width = (r0/2 + r1 + ... + r_{n-1} + r_n/2) / n.
    const std::size_t n = r.size() - 1;
    double s = (r.front() + r.back()) / 2;
    for (std::size_t i = 1; i < n; ++i) {
        s += r[i];
    }
    return s / static_cast<double>(n);
}

const char* bucket_name(SizeBucket b) {
    switch (b) {
        case SizeBucket::All: return "all";
        case SizeBucket::Small: return "small";
        case SizeBucket::Medium: return "medium";
        case SizeBucket::Large: return "large";
    }
    return "?";
}

}  // namespace

double proposal_auc(const ProposalSet& proposals, const AnnotationSet& annotations, const RecallOptions& opts, int k) {
    return trapezoid_auc(recall_at(proposals, annotations, k, auc_thresholds(), opts));
}

nlohmann::json proposal_report(const ProposalSet& proposals, const AnnotationSet& annotations,
                               std::span<const int> budgets, IouType iou_type) {
    nlohmann::json report;
    std::size_t gt = 0;
    std::size_t props = 0;
    for (const auto& [id, a] : annotations.images) {
        gt += static_cast<std::size_t>(std::count_if(a.objects.begin(), a.objects.end(), [](const GtObject& o) { return !o.crowd; }));
    }
    for (const auto& [id, p] : proposals.images) {
        props += p.size();
    }
    report["iou_type"] = iou_type == IouType::Box ? "bbox" : "segm";
    report["images"] = annotations.images.size();
    report["gt_objects"] = gt;
    report["proposals"] = props;

    const auto ar_t = ar_thresholds();
    for (SizeBucket b : {SizeBucket::All, SizeBucket::Small, SizeBucket::Medium, SizeBucket::Large}) {
        const RecallOptions opts{iou_type, b};
        nlohmann::json ar;
        nlohmann::json curves;
        for (int k : budgets) {
            const auto r = recall_at(proposals, annotations, k, ar_t, opts);
            double s = 0;
            for (double v : r) {
                s += v;
            }
            ar[std::to_string(k)] = s / static_cast<double>(r.size());
            auto curve = nlohmann::json::array();
            for (std::size_t i = 0; i < r.size(); ++i) {
                curve.push_back({{"iou", ar_t[i]}, {"recall", r[i]}});
            }
            curves[std::to_string(k)] = curve;
        }
        if (b == SizeBucket::All) {
            report["ar"] = ar;
            report["recall_curves"] = curves;
            const auto auc_t = auc_thresholds();
            const auto r = recall_at(proposals, annotations, 1000, auc_t, opts);
            report["auc"] = trapezoid_auc(r);
            auto curve = nlohmann::json::array();
            for (std::size_t i = 0; i < r.size(); ++i) {
                curve.push_back({{"iou", auc_t[i]}, {"recall", r[i]}});
            }
            report["auc_curve"] = curve;
        } else {
            report["ar_by_size"][bucket_name(b)] = ar;
        }
    }
    report["conventions"] = {
        {"matching", "greedy; ground truth in file order takes the highest-IoU unmatched proposal"},
        {"ar_thresholds", "0.50:0.05:0.95"},
        {"auc", "trapezoid over recall(t), t = 0.50:0.05:1.00, budget 1000, divided by 0.5"},
        {"size_buckets", "area < 32^2, < 96^2, >= 96^2 using the annotation 'area' field"},
        {"crowd", "iscrowd objects excluded from the ground-truth count"},
        {"categories", "collapsed (class-agnostic)"},
    };
    return report;
}

// ---------------------------------------------------------------------------------------------

int default_edge_tolerance(int width, int height) {
    const double diag = std::hypot(static_cast<double>(width), static_cast<double>(height));
    return std::max(2, static_cast<int>(std::lround(0.0075 * diag)));
}

EdgeMatch match_edge_pixels(const BinaryMask& predicted, const BinaryMask& ground_truth, double tolerance_px) {
    if (predicted.width() != ground_truth.width() || predicted.height() != ground_truth.height()) {
        throw DimensionError("edge prediction and ground truth sizes differ");
    }
    struct Offset {
        int dx, dy;
        double d;
    };
    std::vector<Offset> offsets;
    const int r = static_cast<int>(std::floor(tolerance_px));
    for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
            const double d = std::hypot(dx, dy);
            if (d <= tolerance_px) {
                offsets.push_back({dx, dy, d});
            }
        }
    }
    std::stable_sort(offsets.begin(), offsets.end(), [](const Offset& a, const Offset& b) { return a.d < b.d; });

    const int w = predicted.width();
    const int h = predicted.height();
    std::vector<bool> used(static_cast<std::size_t>(w) * h, false);
    EdgeMatch m;
    m.ground_truth = ground_truth.count();
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!predicted.get(x, y)) {
                continue;
            }
            ++m.predicted;
            for (const Offset& o : offsets) {
                const int gx = x + o.dx;
                const int gy = y + o.dy;
                if (gx < 0 || gy < 0 || gx >= w || gy >= h) {
                    continue;
                }
                const std::size_t gi = static_cast<std::size_t>(gy) * w + gx;
                if (!used[gi] && ground_truth.get(gx, gy)) {
                    used[gi] = true;
                    ++m.matched;
                    break;
                }
            }
        }
    }
    return m;
}

namespace {

PrPoint make_point(double t, const EdgeMatch& m) {
    PrPoint p;
    p.threshold = t;
    p.precision = m.predicted ? static_cast<double>(m.matched) / static_cast<double>(m.predicted) : 0.0;
    p.recall = m.ground_truth ? static_cast<double>(m.matched) / static_cast<double>(m.ground_truth) : 0.0;
    p.f1 = p.precision + p.recall > 0 ? 2 * p.precision * p.recall / (p.precision + p.recall) : 0.0;
    return p;
}

}  // namespace

EdgeMetrics edge_metrics(std::span<const EdgeMap> predictions, std::span<const BinaryMask> ground_truth,
                         double tolerance_px, int num_thresholds) {
    if (predictions.size() != ground_truth.size()) {
        throw DimensionError("edge metrics need one ground truth per prediction");
    }
    const int n = std::max(1, num_thresholds);
    std::vector<EdgeMatch> totals(static_cast<std::size_t>(n));
    double ois_sum = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const EdgeMap& pred = predictions[i];
        const BinaryMask& gt = ground_truth[i];
        if (pred.width() != gt.width() || pred.height() != gt.height()) {
            throw DimensionError("edge prediction " + std::to_string(i) + " and its ground truth differ in size");
        }
        const double tol = tolerance_px >= 0 ? tolerance_px : default_edge_tolerance(gt.width(), gt.height());
        double best_f = 0;
        for (int t = 0; t < n; ++t) {
            const double th = (t + 1.0) / (n + 1.0);
            BinaryMask bin(pred.width(), pred.height());
            for (int y = 0; y < pred.height(); ++y) {
                for (int x = 0; x < pred.width(); ++x) {
                    if (pred.strength.at(x, y) >= th) {
                        bin.set(x, y);
                    }
                }
            }
            const EdgeMatch m = match_edge_pixels(bin, gt, tol);
            totals[t].matched += m.matched;
            totals[t].predicted += m.predicted;
            totals[t].ground_truth += m.ground_truth;
            best_f = std::max(best_f, make_point(th, m).f1);
        }
        ois_sum += best_f;
    }

    EdgeMetrics out;
    for (int t = 0; t < n; ++t) {
        const PrPoint p = make_point((t + 1.0) / (n + 1.0), totals[t]);
        out.curve.push_back(p);
        if (p.f1 > out.ods) {
            out.ods = p.f1;
            out.ods_threshold = p.threshold;
        }
        if (p.precision >= 0.5) {
            out.r50 = std::max(out.r50, p.recall);
        }
    }
    out.ois = predictions.empty() ? 0.0 : ois_sum / static_cast<double>(predictions.size());

    // Area under precision(recall): the lowest-recall point's precision extends to recall 0.
    std::vector<PrPoint> pts = out.curve;
    std::sort(pts.begin(), pts.end(), [](const PrPoint& a, const PrPoint& b) {
        return a.recall != b.recall ? a.recall < b.recall : a.precision > b.precision;
    });
    if (!pts.empty()) {
        out.ap = pts.front().recall * pts.front().precision;
        for (std::size_t i = 1; i < pts.size(); ++i) {
            out.ap += (pts[i].recall - pts[i - 1].recall) * (pts[i].precision + pts[i - 1].precision) / 2;
        }
    }
    return out;
}

nlohmann::json edge_report(const EdgeMetrics& m, double tolerance_px, std::size_t images) {
    auto curve = nlohmann::json::array();
    for (const auto& p : m.curve) {
        curve.push_back({{"threshold", p.threshold}, {"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1}});
    }
    return {{"images", images},
            {"tolerance_px", tolerance_px},
            {"ods", m.ods},
            {"ods_threshold", m.ods_threshold},
            {"ois", m.ois},
            {"ap", m.ap},
            {"r50", m.r50},
            {"curve", curve},
            {"conventions",
             {{"matching", "greedy one-to-one within tolerance, nearest unmatched ground-truth pixel"},
              {"thresholds", "t_i = (i + 1) / (N + 1), edge iff strength >= t_i"},
              {"ap", "trapezoid over the dataset P-R curve sorted by recall"},
              {"r50", "max recall among sweep points with precision >= 0.5"}}}};
}

}  // namespace quickseg
