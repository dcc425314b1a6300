#ifndef EHOI_H
#define EHOI_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum EhoiStatus {
  EHOI_STATUS_OK = 0,
  EHOI_STATUS_INVALID_ARGUMENT = 1,
  EHOI_STATUS_PARSE_ERROR = 2,
  EHOI_STATUS_VALIDATION_ERROR = 3,
  EHOI_STATUS_IO_ERROR = 4,
  EHOI_STATUS_PANIC = 99,
} EhoiStatus;

/**
 * Columns of the results table.
 */
typedef enum EhoiMetric {
  EHOI_METRIC_AP_HAND = 0,
  EHOI_METRIC_MAP_OBJ = 1,
  EHOI_METRIC_AP_H_SIDE = 2,
  EHOI_METRIC_AP_H_STATE = 3,
  EHOI_METRIC_MAP_H_OBJ = 4,
  EHOI_METRIC_MAP_ALL = 5,
} EhoiMetric;

typedef enum EhoiInterpolation {
  EHOI_INTERPOLATION_COCO101 = 0,
  EHOI_INTERPOLATION_ALL_POINTS = 1,
} EhoiInterpolation;

/**
 * Validated ground-truth annotations.
 */
typedef struct EhoiAnnotations EhoiAnnotations;

/**
 * Validated detector output.
 */
typedef struct EhoiDetections EhoiDetections;

/**
 * Normalized blur kernel.
 */
typedef struct EhoiKernel EhoiKernel;

/**
 * Evaluation result.
 */
typedef struct EhoiReport EhoiReport;

/**
 * Axis-aligned box, top-left corner plus size.
 */
typedef struct EhoiBox {
  double x;
  double y;
  double w;
  double h;
} EhoiBox;

typedef struct EhoiOffset {
  double vx;
  double vy;
  double m;
} EhoiOffset;

typedef struct EhoiPoint {
  double x;
  double y;
} EhoiPoint;

typedef struct EhoiStats {
  uint64_t videos;
  uint64_t images;
  uint64_t hands;
  uint64_t hands_in_contact;
  uint64_t hands_not_in_contact;
  uint64_t left_hands;
  uint64_t right_hands;
  uint64_t object_categories;
  uint64_t objects;
  uint64_t active_objects;
} EhoiStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null after a success.
 * Valid until the next call into the library on this thread.
 */
const char *ehoi_last_error_message(void);

void ehoi_string_free(char *s);

enum EhoiStatus ehoi_iou(struct EhoiBox a, struct EhoiBox b, double *result);

enum EhoiStatus ehoi_intersects(struct EhoiBox a, struct EhoiBox b, bool *result);

enum EhoiStatus ehoi_encode_offset(struct EhoiBox hand,
                                   struct EhoiBox object,
                                   uint32_t width,
                                   uint32_t height,
                                   struct EhoiOffset *result);

enum EhoiStatus ehoi_decode_offset(struct EhoiBox hand,
                                   struct EhoiOffset offset,
                                   uint32_t width,
                                   uint32_t height,
                                   struct EhoiPoint *result);

/**
 * Parses an annotation document from a NUL-terminated JSON string.
 */
enum EhoiStatus ehoi_annotations_parse(const char *json, struct EhoiAnnotations **result);

enum EhoiStatus ehoi_annotations_read(const char *path, struct EhoiAnnotations **result);

void ehoi_annotations_free(struct EhoiAnnotations *h);

enum EhoiStatus ehoi_annotations_stats(const struct EhoiAnnotations *h, struct EhoiStats *result);

/**
 * Parses detections; `contact_threshold` applies to hands given as contact probabilities.
 */
enum EhoiStatus ehoi_detections_parse(const char *json,
                                      double contact_threshold,
                                      struct EhoiDetections **result);

void ehoi_detections_free(struct EhoiDetections *h);

/**
 * Runs the matcher and returns the annotated detections as JSON.
 * `sizes` may be null when every detection frame carries its dimensions.
 */
enum EhoiStatus ehoi_match(const struct EhoiDetections *dets,
                           const struct EhoiAnnotations *sizes,
                           char **result_json);

/**
 * `interpolation` is an `EhoiInterpolation` value.
 */
enum EhoiStatus ehoi_evaluate(const struct EhoiAnnotations *gt,
                              const struct EhoiDetections *dets,
                              double iou_threshold,
                              int32_t interpolation,
                              struct EhoiReport **result);

/**
 * Value in percent of an `EhoiMetric`.
 */
enum EhoiStatus ehoi_report_metric(const struct EhoiReport *h, int32_t metric, double *result);

enum EhoiStatus ehoi_report_to_json(const struct EhoiReport *h, char **result_json);

void ehoi_report_free(struct EhoiReport *h);

enum EhoiStatus ehoi_kernel_generate(size_t size,
                                     size_t trajectory_points,
                                     uint64_t seed,
                                     struct EhoiKernel **result);

/**
 * Side length of the kernel, 0 for a null handle.
 */
size_t ehoi_kernel_size(const struct EhoiKernel *h);

/**
 * Copies the row-major weights into `buffer`, which must hold `size * size` values.
 */
enum EhoiStatus ehoi_kernel_weights(const struct EhoiKernel *h, double *buffer, size_t len);

void ehoi_kernel_free(struct EhoiKernel *h);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EHOI_H */
