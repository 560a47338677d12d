#ifndef PRICEVAR_H
#define PRICEVAR_H

#include <stddef.h>
#include <stdint.h>

// Result codes.
typedef enum PvStatus {
  PV_STATUS_OK = 0,
  PV_STATUS_NULL_ARGUMENT = 1,
  PV_STATUS_INVALID_UTF8 = 2,
  PV_STATUS_INVALID_ARGUMENT = 3,
  PV_STATUS_SELECTOR_MISS = 4,
  PV_STATUS_UNPARSEABLE_PRICE = 5,
  PV_STATUS_UNKNOWN_CURRENCY = 6,
  PV_STATUS_MISSING_RATE = 7,
  PV_STATUS_INSUFFICIENT_DATA = 8,
  PV_STATUS_BUFFER_TOO_SMALL = 9,
  PV_STATUS_PANIC = 10,
} PvStatus;

typedef enum PvVariationClass {
  PV_VARIATION_CLASS_MULTIPLICATIVE = 0,
  PV_VARIATION_CLASS_ADDITIVE = 1,
  PV_VARIATION_CLASS_MIXED = 2,
  PV_VARIATION_CLASS_FLAT = 3,
} PvVariationClass;

// Reads price text into money. Shareable across threads for reading.
typedef struct PvParser PvParser;

// Daily rate windows against one reference currency.
typedef struct PvRateTable PvRateTable;

typedef struct PvGateResult {
  // 1 when the prices cannot be reconciled by exchange rates alone.
  int32_t passed;
  double observed_gap;
  double max_currency_gap;
  double pessimistic_ratio;
  // Input indices of the deciding pair.
  size_t cheaper;
  size_t dearer;
} PvGateResult;

typedef struct PvFitResult {
  double a;
  double b;
  double residual;
  enum PvVariationClass variation;
  // 1 when every p_min was equal and the slope is undetermined.
  int32_t degenerate;
} PvFitResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the calling thread's last error message into `buf`.
//
// Returns the length the message needs including the NUL, or 0 when the
// last call succeeded. Truncates to fit `len`.
//
// # Safety
// `buf` must be null or valid for `len` bytes.
size_t pv_last_error(char *buf, size_t len);

// Library version as a static NUL-terminated string.
const char *pv_version(void);

// Parser with the built-in currency configuration.
//
// # Safety
// `out` must be valid for a pointer write.
enum PvStatus pv_parser_new(struct PvParser **out);

// Parser with a currency configuration in the text format the CLI reads.
//
// # Safety
// `config` must be a valid C string; `out` must be valid for a pointer write.
enum PvStatus pv_parser_from_config(const char *config, struct PvParser **out);

// # Safety
// `parser` must be null or come from a `pv_parser_*` constructor, and not be
// used afterwards.
void pv_parser_free(struct PvParser *parser);

// Reads one price text (`"1.299,00 €"`) to canonical `"EUR 1299.00"`.
// `locale` may be null.
//
// # Safety
// Pointers must be valid; `buf` must be valid for `len` bytes.
enum PvStatus pv_parse_price(const struct PvParser *parser,
                             const char *text,
                             const char *locale,
                             char *buf,
                             size_t len,
                             size_t *needed);

// Locates the price in `html` with `selector` (`dom-path:...` or
// `text-anchor:...`) and writes its canonical form.
//
// # Safety
// Pointers must be valid; `buf` must be valid for `len` bytes.
enum PvStatus pv_extract(const struct PvParser *parser,
                         const char *html,
                         const char *selector,
                         char *buf,
                         size_t len,
                         size_t *needed);

// Loads `date,base,quote,low,high` records.
//
// # Safety
// Strings must be valid C strings; `out` must be valid for a pointer write.
enum PvStatus pv_rates_parse(const char *records, const char *reference, struct PvRateTable **out);

// # Safety
// `table` must be null or come from `pv_rates_parse`, and not be used
// afterwards.
void pv_rates_free(struct PvRateTable *table);

// Currency gate over `n` prices (`"100.00 EUR"`) observed on `date`
// (`YYYY-MM-DD`).
//
// # Safety
// `prices` must point to `n` valid C strings; other pointers must be valid.
enum PvStatus pv_gate(const struct PvRateTable *table,
                      const char *date_text,
                      const char *const *prices,
                      size_t n,
                      struct PvGateResult *out);

// Fits `p_loc = a·p_min + b` over `n` pairs of decimal texts and classifies
// the variation.
//
// # Safety
// `p_min` and `p_loc` must each point to `n` valid C strings; `out` must be
// valid.
enum PvStatus pv_fit(const char *const *p_min,
                     const char *const *p_loc,
                     size_t n,
                     struct PvFitResult *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PRICEVAR_H */
