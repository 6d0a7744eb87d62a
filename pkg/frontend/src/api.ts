import type {
  ExportResponse,
  ObjectDetail,
  ObjectListResponse,
  VerdictRecord,
  VerdictRequest,
} from './types'

export class ApiError extends Error {
  status: number

  constructor(status: number, message: string) {
    super(message)
    this.status = status
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>

/** Thin typed client for the review service; the UI never touches the
 *  dataset except through these endpoints. */
export class ApiClient {
  private base: string
  private fetchImpl: FetchLike

  constructor(baseUrl = '', fetchImpl: FetchLike = (...args) => fetch(...args)) {
    this.base = baseUrl.replace(/\/$/, '')
    this.fetchImpl = fetchImpl
  }

  private async getJson<T>(path: string): Promise<T> {
    const res = await this.fetchImpl(`${this.base}${path}`)
    if (!res.ok) throw new ApiError(res.status, `GET ${path} -> ${res.status}`)
    return (await res.json()) as T
  }

  listObjects(): Promise<ObjectListResponse> {
    return this.getJson('/api/objects')
  }

  getObject(objectId: string): Promise<ObjectDetail> {
    return this.getJson(`/api/objects/${encodeURIComponent(objectId)}`)
  }

  exportGroundTruth(): Promise<ExportResponse> {
    return this.getJson('/api/export')
  }

  async postVerdict(objectId: string, body: VerdictRequest): Promise<VerdictRecord> {
    const res = await this.fetchImpl(
      `${this.base}/api/objects/${encodeURIComponent(objectId)}/verdicts`,
      {
        method: 'POST',
        headers: { 'Content-Type': 'application/json' },
        body: JSON.stringify(body),
      },
    )
    if (res.status !== 201) {
      throw new ApiError(res.status, `POST verdict -> ${res.status}`)
    }
    const json = (await res.json()) as { record: VerdictRecord }
    return json.record
  }
}
