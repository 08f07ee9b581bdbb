#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "quickseg/edge.hpp"
#include "quickseg/geometry.hpp"
#include "quickseg/mask.hpp"

namespace quickseg {

// ---------------------------------------------------------------------------------------------
// Annotations and proposals. Image ids are kept as strings so integer COCO ids and service
// session ids share one key space.

struct GtObject {
    BoundingBox box;
    double area = 0;
    std::optional<BinaryMask> mask;
    bool crowd = false;
    int category_id = 0;
};

struct ImageAnnotations {
    int width = 0;
    int height = 0;
    std::vector<GtObject> objects;
};

struct AnnotationSet {
    std::map<std::string, ImageAnnotations> images;
};

struct Proposal {
    BoundingBox box;
    double score = 0;
    std::optional<BinaryMask> mask;
};

/// Per image, sorted by descending score (stable for equal scores).
struct ProposalSet {
    std::map<std::string, std::vector<Proposal>> images;

    void sort_by_score();
};

/// COCO/LVIS instances JSON. Categories are collapsed; polygons and RLE become masks.
/// Throws SchemaError naming the offending JSON path.
AnnotationSet parse_coco_json(const nlohmann::json& j);
AnnotationSet load_coco_json(const std::string& path);

/// COCO results format (a list of {image_id, bbox, score[, segmentation]}), or an
/// everything-mode document with an "instances" array. Proposals for images absent from
/// `annotations` raise InputError.
ProposalSet parse_proposals(const nlohmann::json& j, const AnnotationSet& annotations);
ProposalSet load_proposals(const std::string& path, const AnnotationSet& annotations);

// ---------------------------------------------------------------------------------------------
// Proposal recall.

enum class IouType { Box, Mask };

/// COCO area buckets: small < 32^2 <= medium < 96^2 <= large.
enum class SizeBucket { All, Small, Medium, Large };

struct RecallOptions {
    IouType iou_type = IouType::Box;
    SizeBucket bucket = SizeBucket::All;
};

/// 0.50, 0.55, ..., 0.95.
std::vector<double> ar_thresholds();
/// 0.50, 0.55, ..., 1.00, the abscissae of the AUC curve.
std::vector<double> auc_thresholds();

/// Recall per threshold with the top-k proposals per image. GT objects are visited in file
/// order, each taking the highest-IoU unmatched proposal with IoU >= t. Crowd objects are not
/// counted.
std::vector<double> recall_at(const ProposalSet& proposals, const AnnotationSet& annotations, int k,
                              std::span<const double> thresholds, const RecallOptions& opts = {});

/// Mean recall over ar_thresholds().
double average_recall(const ProposalSet& proposals, const AnnotationSet& annotations, int k,
                      const RecallOptions& opts = {});

/// Trapezoidal area under recall(t) for t in auc_thresholds(), divided by the 0.5 interval width.
double proposal_auc(const ProposalSet& proposals, const AnnotationSet& annotations, const RecallOptions& opts = {},
                    int k = 1000);

/// Machine-readable report: AR per budget, AUC, size buckets, full curves and conventions.
nlohmann::json proposal_report(const ProposalSet& proposals, const AnnotationSet& annotations,
                               std::span<const int> budgets, IouType iou_type = IouType::Box);

// ---------------------------------------------------------------------------------------------
// Edge metrics.

struct EdgeMatch {
    std::size_t matched = 0;
    std::size_t predicted = 0;
    std::size_t ground_truth = 0;
};

/// Greedy one-to-one matching of predicted pixels (raster order) to the nearest unmatched
/// ground-truth pixel within `tolerance_px` (Euclidean).
EdgeMatch match_edge_pixels(const BinaryMask& predicted, const BinaryMask& ground_truth, double tolerance_px);

/// max(2, round(0.0075 * image diagonal)).
int default_edge_tolerance(int width, int height);

struct PrPoint {
    double threshold = 0;
    double precision = 0;
    double recall = 0;
    double f1 = 0;
};

struct EdgeMetrics {
    double ods = 0;
    double ois = 0;
    double ap = 0;
    double r50 = 0;
    double ods_threshold = 0;
    std::vector<PrPoint> curve;
};

/// Sweeps `num_thresholds` thresholds t_i = (i + 1) / (N + 1); a pixel is an edge iff
/// strength >= t_i. `tolerance_px` < 0 selects default_edge_tolerance per image.
/// Throws DimensionError for mismatched pairs.
EdgeMetrics edge_metrics(std::span<const EdgeMap> predictions, std::span<const BinaryMask> ground_truth,
                         double tolerance_px = -1, int num_thresholds = 50);

nlohmann::json edge_report(const EdgeMetrics& m, double tolerance_px, std::size_t images);

}  // namespace quickseg
