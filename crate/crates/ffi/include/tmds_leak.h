#ifndef TMDS_LEAK_H
#define TMDS_LEAK_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum TlStatus {
  TL_STATUS_OK = 0,
  TL_STATUS_NULL_POINTER = 1,
  TL_STATUS_INVALID_ARGUMENT = 2,
  TL_STATUS_UNKNOWN_TIMING = 3,
  TL_STATUS_FORMAT = 4,
  TL_STATUS_IO = 5,
  TL_STATUS_ALIGNMENT_FAILED = 6,
  TL_STATUS_DIMENSIONS = 7,
  TL_STATUS_TMDS = 8,
  TL_STATUS_BUFFER_TOO_SMALL = 9,
  TL_STATUS_INTERNAL = 10,
} TlStatus;

/**
 * Pulse shape selector for [`tl_simulator_new`].
 */
typedef enum TlPulse {
  TL_PULSE_RECT = 0,
  TL_PULSE_DELAYED_DIFFERENCE = 1,
} TlPulse;

/**
 * Opaque complex image.
 */
typedef struct TlComplexImage TlComplexImage;

/**
 * Opaque simulation settings.
 */
typedef struct TlSimulator TlSimulator;

/**
 * Opaque video timing.
 */
typedef struct TlTiming TlTiming;

/**
 * Plain description of a video timing.
 */
typedef struct TlTimingInfo {
  uint32_t active_x;
  uint32_t active_y;
  uint32_t total_x;
  uint32_t total_y;
  double pixel_rate_hz;
  double frame_rate_hz;
} TlTimingInfo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *tl_version(void);

/**
 * Copies the calling thread's last error message into `buf` (always
 * NUL-terminated when `len > 0`). Returns the full message length
 * excluding the terminator, or 0 if there is none.
 *
 * # Safety
 * `buf` must point to `len` writable bytes or be null with `len == 0`.
 */
size_t tl_last_error_message(char *buf, size_t len);

/**
 * Encodes one pixel byte. `disparity` is read as the running disparity
 * before the symbol and updated in place.
 *
 * # Safety
 * `symbol` and `disparity` must be valid pointers.
 */
enum TlStatus tl_tmds_encode(uint8_t byte, int32_t *disparity, uint16_t *symbol);

/**
 * Decodes a 10-bit video symbol.
 *
 * # Safety
 * `byte` must be a valid pointer.
 */
enum TlStatus tl_tmds_decode(uint16_t symbol, uint8_t *byte);

/**
 * Looks up a built-in timing such as "1600x900@60".
 *
 * # Safety
 * `name` must be a NUL-terminated string and `timing` a valid pointer.
 */
enum TlStatus tl_timing_lookup(const char *name, struct TlTiming **timing);

/**
 * # Safety
 * `timing` must come from [`tl_timing_lookup`] or be null.
 */
void tl_timing_free(struct TlTiming *timing);

/**
 * # Safety
 * Both pointers must be valid.
 */
enum TlStatus tl_timing_info(const struct TlTiming *timing, struct TlTimingInfo *info);

/**
 * Creates simulation settings: tuning `fc` and sampling rate `fs` in Hz,
 * complex noise `noise_sigma` per component, and random time, phase and
 * tuning offsets drawn from `seed`. `epsilon` is ignored for the
 * rectangular pulse.
 *
 * # Safety
 * `timing` and `simulator` must be valid pointers.
 */
enum TlStatus tl_simulator_new(const struct TlTiming *timing,
                               double fc,
                               double fs,
                               enum TlPulse pulse,
                               double epsilon,
                               double noise_sigma,
                               uint64_t seed,
                               struct TlSimulator **simulator);

/**
 * # Safety
 * `simulator` must come from [`tl_simulator_new`] or be null.
 */
void tl_simulator_free(struct TlSimulator *simulator);

/**
 * Simulates the aligned complex capture of an 8-bit grayscale image of
 * exactly the active size (row-major, `width * height` bytes).
 *
 * # Safety
 * `pixels` must point to `width * height` bytes; the other pointers must
 * be valid.
 */
enum TlStatus tl_simulate(const struct TlSimulator *simulator,
                          const uint8_t *pixels,
                          uint32_t width,
                          uint32_t height,
                          struct TlComplexImage **image);

/**
 * # Safety
 * `image` must come from this library or be null.
 */
void tl_image_free(struct TlComplexImage *image);

/**
 * Number of rows, or 0 for a null handle.
 *
 * # Safety
 * `image` must be a valid handle or null.
 */
size_t tl_image_rows(const struct TlComplexImage *image);

/**
 * Number of columns, or 0 for a null handle.
 *
 * # Safety
 * `image` must be a valid handle or null.
 */
size_t tl_image_cols(const struct TlComplexImage *image);

/**
 * Pointer to `rows * cols` interleaved (I, Q) floats, valid until the
 * handle is freed; null for a null handle.
 *
 * # Safety
 * `image` must be a valid handle or null.
 */
const float *tl_image_data(const struct TlComplexImage *image);

/**
 * Envelope baseline into `out` (`rows * cols` bytes).
 *
 * # Safety
 * `out` must point to `len` writable bytes.
 */
enum TlStatus tl_envelope(const struct TlComplexImage *image, uint8_t *out, size_t len);

/**
 * Reads a DTCX file; `fs` and `fc` receive the header rates when non-null.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `image` a valid pointer.
 */
enum TlStatus tl_capture_read(const char *path,
                              struct TlComplexImage **image,
                              double *fs,
                              double *fc);

/**
 * Writes a DTCX file marked as cropped, with an all-zero meta hash.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `image` a valid handle.
 */
enum TlStatus tl_capture_write(const char *path,
                               const struct TlComplexImage *image,
                               double fs,
                               double fc);

/**
 * PSNR in dB between two 8-bit images of `width * height` bytes; writes
 * infinity for identical images.
 *
 * # Safety
 * `a` and `b` must point to `width * height` bytes; `db` must be valid.
 */
enum TlStatus tl_psnr(const uint8_t *a,
                      const uint8_t *b,
                      uint32_t width,
                      uint32_t height,
                      double *db);

/**
 * Character error rate of `hypothesis` against `reference`.
 *
 * # Safety
 * Both strings must be NUL-terminated UTF-8; `rate` must be valid.
 */
enum TlStatus tl_cer(const char *reference, const char *hypothesis, double *rate);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TMDS_LEAK_H */
