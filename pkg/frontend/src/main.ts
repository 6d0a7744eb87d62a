import { ApiClient } from './api'
import { TASK_COLORS, TASK_ORDER } from './geometry'
import { ReviewSession } from './session'
import { ObjectViewer } from './viewer'

const api = new ApiClient('')
const session = new ReviewSession(api, localStorage.getItem('reviewer') ?? 'anonymous')

const objectList = document.getElementById('object-list') as HTMLElement
const graspPanel = document.getElementById('grasp-panel') as HTMLElement
const legend = document.getElementById('legend') as HTMLElement
const statusBar = document.getElementById('status') as HTMLElement
const viewerHost = document.getElementById('viewer') as HTMLElement
const reviewerInput = document.getElementById('reviewer') as HTMLInputElement

const viewer = new ObjectViewer(viewerHost)
const visibleTasks = new Set<string>(TASK_ORDER)
let selectedGrasp: string | null = null
let selectedTask: string | null = null

reviewerInput.value = session.reviewer
reviewerInput.addEventListener('change', () => {
  session.reviewer = reviewerInput.value || 'anonymous'
  localStorage.setItem('reviewer', session.reviewer)
})

function setStatus(text: string, bad = false): void {
  statusBar.textContent = text
  statusBar.className = bad ? 'bad' : ''
}

function renderLegend(): void {
  legend.innerHTML = ''
  for (const task of TASK_ORDER) {
    const chip = document.createElement('label')
    chip.className = 'chip'
    const box = document.createElement('input')
    box.type = 'checkbox'
    box.checked = visibleTasks.has(task)
    box.addEventListener('change', () => {
      if (box.checked) visibleTasks.add(task)
      else visibleTasks.delete(task)
      refreshView()
    })
    const swatch = document.createElement('span')
    swatch.className = 'swatch'
    swatch.style.background = TASK_COLORS[task]
    chip.append(box, swatch, document.createTextNode(task))
    legend.appendChild(chip)
  }
}

function renderQueue(): void {
  objectList.innerHTML = ''
  for (const item of session.queue) {
    const row = document.createElement('div')
    row.className = 'object-row'
    if (session.current?.object_id === item.object_id) row.classList.add('active')
    row.textContent = `${item.object_id} (${item.category})`
    const badge = document.createElement('span')
    badge.className = 'badge'
    badge.textContent = String(item.labels.unreviewed)
    row.appendChild(badge)
    row.addEventListener('click', () => { void openObject(item.object_id) })
    objectList.appendChild(row)
  }
}

function renderGrasps(): void {
  graspPanel.innerHTML = ''
  const detail = session.current
  if (!detail) return
  for (const grasp of detail.grasps) {
    const card = document.createElement('div')
    card.className = 'grasp-card'
    if (grasp.grasp_id === selectedGrasp) card.classList.add('selected')
    const title = document.createElement('div')
    title.className = 'grasp-title'
    title.textContent = grasp.grasp_id
    card.appendChild(title)
    for (const task of grasp.tasks) {
      const row = document.createElement('div')
      row.className = 'label-row'
      if (grasp.grasp_id === selectedGrasp && task === selectedTask) {
        row.classList.add('selected')
      }
      const swatch = document.createElement('span')
      swatch.className = 'swatch'
      swatch.style.background = TASK_COLORS[task]
      const state = session.verdictOf(grasp.grasp_id, task)
      const verdict = document.createElement('span')
      verdict.className = `verdict ${state}`
      verdict.textContent = state
      const accept = document.createElement('button')
      accept.textContent = 'accept'
      accept.addEventListener('click', () => mark(grasp.grasp_id, task, 'accepted'))
      const reject = document.createElement('button')
      reject.textContent = 'reject'
      reject.addEventListener('click', () => mark(grasp.grasp_id, task, 'rejected'))
      row.append(swatch, document.createTextNode(task), verdict, accept, reject)
      row.addEventListener('click', () => {
        selectedGrasp = grasp.grasp_id
        selectedTask = task
        viewer.highlight(selectedGrasp)
        renderGrasps()
      })
      card.appendChild(row)
    }
    graspPanel.appendChild(card)
  }
}

function refreshView(): void {
  if (session.current) viewer.show(session.current, visibleTasks)
  viewer.highlight(selectedGrasp)
  renderGrasps()
  renderQueue()
  const pending = session.pending.length
  setStatus(
    session.offline
      ? `offline: ${pending} verdict(s) queued; retry with Enter`
      : pending > 0
        ? `${pending} verdict(s) pending upload`
        : `${session.unreviewedCount()} labels unreviewed on this object`,
    session.offline,
  )
}

function mark(graspId: string, task: string, verdict: 'accepted' | 'rejected'): void {
  session.mark(graspId, task, verdict)
  selectedGrasp = graspId
  selectedTask = task
  refreshView()
  void upload()
}

async function upload(): Promise<void> {
  await session.flush()
  await session.load()  // refresh queue counts from the server
  refreshView()
}

async function openObject(objectId: string): Promise<void> {
  if (!session.canAdvance()) {
    setStatus('upload pending verdicts before switching objects', true)
    return
  }
  await session.open(objectId)
  selectedGrasp = session.current?.grasps[0]?.grasp_id ?? null
  selectedTask = session.current?.grasps[0]?.tasks[0] ?? null
  refreshView()
}

function selectionOffset(delta: number): void {
  const detail = session.current
  if (!detail) return
  const flat: [string, string][] = []
  for (const g of detail.grasps) for (const t of g.tasks) flat.push([g.grasp_id, t])
  if (flat.length === 0) return
  const idx = flat.findIndex(([g, t]) => g === selectedGrasp && t === selectedTask)
  const next = flat[(idx + delta + flat.length) % flat.length]
  selectedGrasp = next[0]
  selectedTask = next[1]
  viewer.highlight(selectedGrasp)
  renderGrasps()
}

document.addEventListener('keydown', (ev) => {
  if (ev.target instanceof HTMLInputElement) return
  if (ev.key === 'a' && selectedGrasp && selectedTask) {
    mark(selectedGrasp, selectedTask, 'accepted')
  } else if (ev.key === 'r' && selectedGrasp && selectedTask) {
    mark(selectedGrasp, selectedTask, 'rejected')
  } else if (ev.key === 'j' || ev.key === 'ArrowDown') {
    selectionOffset(1)
  } else if (ev.key === 'k' || ev.key === 'ArrowUp') {
    selectionOffset(-1)
  } else if (ev.key === 'n') {
    void session.advance().then(() => {
      selectedGrasp = session.current?.grasps[0]?.grasp_id ?? null
      selectedTask = session.current?.grasps[0]?.tasks[0] ?? null
      refreshView()
    }).catch(() => setStatus('cannot advance: verdicts still pending', true))
  } else if (ev.key === 'Enter') {
    void upload()
  }
})

async function boot(): Promise<void> {
  setStatus('loading objects...')
  await session.load()
  renderLegend()
  renderQueue()
  if (session.queue.length > 0) await openObject(session.queue[0].object_id)
  else setStatus('no objects in the workspace; run ingest first', true)
}

void boot()
