#ifndef NETWAVE_H
#define NETWAVE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum NwStatus {
  NW_STATUS_OK = 0,
  NW_STATUS_NULL_POINTER = 1,
  NW_STATUS_INVALID_UTF8 = 2,
  NW_STATUS_INVALID_ARGUMENT = 3,
  NW_STATUS_SCENARIO = 4,
  NW_STATUS_IO = 5,
  NW_STATUS_NUMERICAL = 6,
  NW_STATUS_OUT_OF_RANGE = 7,
  NW_STATUS_PANIC = 8,
} NwStatus;

/**
 * Per-frame records of one campaign.
 */
typedef struct NwCampaign NwCampaign;

/**
 * Parsed and validated scenario.
 */
typedef struct NwScenario NwScenario;

/**
 * Scalar fields of one frame record.
 */
typedef struct NwFrameRecord {
  uintptr_t frame;
  double zeta;
  double pcrlb_trace;
  double crlb_x;
  double crlb_y;
  double crlb_vx;
  double crlb_vy;
  /**
   * 1 when the designed codes passed the per-frame gate.
   */
  uint8_t accepted;
  uintptr_t iterations;
} NwFrameRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null if none. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *nw_last_error_message(void);

/**
 * Generalized Marcum Q function of integer order `order >= 1`.
 *
 * # Safety
 * `out` must be null or point to writable memory for one `double`.
 */
enum NwStatus nw_marcum_q(uint32_t order, double a, double b, double *out);

/**
 * Detection probability at the given SINR and false-alarm probability.
 *
 * # Safety
 * `out` must be null or point to writable memory for one `double`.
 */
enum NwStatus nw_detection_probability(double sinr, double pfa, double *out);

/**
 * Loads a scenario from a TOML file path or a built-in name.
 *
 * # Safety
 * `source` must be null or a NUL-terminated string; `out` must be null or
 * point to writable memory for one pointer.
 */
enum NwStatus nw_scenario_load(const char *source, struct NwScenario **out);

/**
 * Parses a scenario from TOML text.
 *
 * # Safety
 * Same contract as [`nw_scenario_load`].
 */
enum NwStatus nw_scenario_from_toml(const char *text, struct NwScenario **out);

/**
 * # Safety
 * `scenario` must be null or a handle from this library not yet freed.
 */
void nw_scenario_free(struct NwScenario *scenario);

/**
 * Number of nodes, or 0 for a null handle.
 *
 * # Safety
 * `scenario` must be null or a live handle.
 */
uintptr_t nw_scenario_nodes(const struct NwScenario *scenario);

/**
 * Number of frames, or 0 for a null handle.
 *
 * # Safety
 * `scenario` must be null or a live handle.
 */
uintptr_t nw_scenario_frames(const struct NwScenario *scenario);

/**
 * Overrides the frame count; `frames` must be at least 1.
 *
 * # Safety
 * `scenario` must be null or a live handle.
 */
enum NwStatus nw_scenario_set_frames(struct NwScenario *scenario, uintptr_t frames);

/**
 * Runs one campaign at similarity `zeta` (0 keeps the reference code).
 *
 * # Safety
 * `scenario` must be null or a live handle; `out` must be null or point to
 * writable memory for one pointer.
 */
enum NwStatus nw_campaign_run(const struct NwScenario *scenario,
                              double zeta,
                              struct NwCampaign **out);

/**
 * # Safety
 * `campaign` must be null or a handle from this library not yet freed.
 */
void nw_campaign_free(struct NwCampaign *campaign);

/**
 * Number of frame records, or 0 for a null handle.
 *
 * # Safety
 * `campaign` must be null or a live handle.
 */
uintptr_t nw_campaign_len(const struct NwCampaign *campaign);

/**
 * Scalar fields of record `index` (0-based).
 *
 * # Safety
 * `campaign` must be null or a live handle; `out` must be null or point to
 * one writable `NwFrameRecord`.
 */
enum NwStatus nw_campaign_frame(const struct NwCampaign *campaign,
                                uintptr_t index,
                                struct NwFrameRecord *out);

/**
 * Detection probability of node `node` (0-based) in record `index`, with
 * the SINR-benchmark value alongside.
 *
 * # Safety
 * `campaign` must be null or a live handle; `pd` and `pd_bench` must be null
 * or point to one writable `double` each.
 */
enum NwStatus nw_campaign_detection(const struct NwCampaign *campaign,
                                    uintptr_t index,
                                    uintptr_t node,
                                    double *pd,
                                    double *pd_bench);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NETWAVE_H */
