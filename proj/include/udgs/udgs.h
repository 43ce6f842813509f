/* udgs C API: monocular Gaussian-splatting SLAM engine with external
 * metric depth. All functions return udgs_status; udgs_last_error() holds
 * a human-readable message for the calling thread's most recent failure.
 * Opaque handles must be released with their matching _destroy call. */

#ifndef UDGS_UDGS_H
#define UDGS_UDGS_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum udgs_status {
  UDGS_OK = 0,
  UDGS_ERR_INVALID_ARGUMENT = 1,
  UDGS_ERR_DATA = 2,
  UDGS_ERR_IO = 3,
  UDGS_ERR_TRACKING_DIVERGED = 4,
  UDGS_ERR_INTERNAL = 5
} udgs_status;

typedef struct udgs_config udgs_config;
typedef struct udgs_map udgs_map;

const char* udgs_version(void);

/* Message for the current thread's last failed call; empty string if none. */
const char* udgs_last_error(void);

/* ---- configuration ---------------------------------------------------- */

udgs_status udgs_config_create(udgs_config** out);
udgs_status udgs_config_load(const char* path, udgs_config** out);
udgs_status udgs_config_set(udgs_config* cfg, const char* key, const char* value);
/* Copies the value of one key into buf (NUL terminated, truncating). */
udgs_status udgs_config_get(const udgs_config* cfg, const char* key, char* buf,
                            size_t buf_len);
void udgs_config_destroy(udgs_config* cfg);

/* ---- pipeline --------------------------------------------------------- */

/* Full SLAM over a TUM-layout sequence directory; writes trajectory.txt,
 * keyframes.txt, map.bin, manifest.json, diagnostics.csv and metrics.csv
 * into out_dir. cfg may be NULL for defaults. On UDGS_ERR_TRACKING_DIVERGED
 * partial outputs are still written; *diverged_frame (optional) reports
 * where tracking halted. */
udgs_status udgs_run(const char* seq_dir, const udgs_config* cfg,
                     const char* out_dir, int* diverged_frame);

/* IQR depth filtering of a single depth file (.png 16-bit or rawf32).
 * mode is "patch" or "global"; report_path (optional) receives a CSV
 * histogram of the filtered map. */
udgs_status udgs_filter_depth(const char* in_path, const char* out_path,
                              int window, double k, const char* mode,
                              const char* report_path);

/* ATE-RMSE between two TUM trajectory files, in meters. */
udgs_status udgs_eval_ate(const char* est_path, const char* gt_path,
                          int with_scale, double* out_ate_m);

/* Mean PSNR/SSIM over same-named PNG pairs in two directories. */
udgs_status udgs_eval_render(const char* dir_a, const char* dir_b,
                             double* out_psnr_db, double* out_ssim);

/* ---- map snapshots ---------------------------------------------------- */

udgs_status udgs_map_load(const char* path, udgs_map** out);
udgs_status udgs_map_count(const udgs_map* map, size_t* out_count);
/* Renders a loaded map from a TUM-convention camera-to-world pose
 * (tx ty tz qx qy qz qw) and writes a PNG; depth_raw_path (optional)
 * receives the rawf32 depth. */
udgs_status udgs_map_render(const udgs_map* map, const double pose_tum[7],
                            double fx, double fy, double cx, double cy,
                            int width, int height, const char* out_png,
                            const char* depth_raw_path);
void udgs_map_destroy(udgs_map* map);

/* ---- synthetic harness ------------------------------------------------ */

/* Writes a ready-to-run synthetic orbit sequence (rgb.txt, depth.txt,
 * groundtruth.txt, intrinsics.txt, frames) into out_dir. tail_fraction > 0
 * adds heavy-right-tail depth corruption. */
udgs_status udgs_synth(const char* out_dir, int n_splats, int n_frames,
                       double radius, uint64_t seed, int resolution,
                       double tail_fraction, double tail_scale);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* UDGS_UDGS_H */
